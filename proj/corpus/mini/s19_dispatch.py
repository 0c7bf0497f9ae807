handler = handlers.get(event.kind)
if handler:
    handler(event)
else:
    fallback(event)
done = True
