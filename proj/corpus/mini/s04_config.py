with open(path) as fh:
    lines = fh.readlines()
settings = {}
for line in lines:
    key, _, value = line.partition('=')
    settings[key.strip()] = value.strip()
print(len(settings))
