logger.setLevel(level)
handler = logging.StreamHandler()
logger.addHandler(handler)
logger.info(message)
