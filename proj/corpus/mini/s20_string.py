words = sentence.split()
capitalized = [w.capitalize() for w in words]
joined = sep.join(capitalized)
print(joined)
