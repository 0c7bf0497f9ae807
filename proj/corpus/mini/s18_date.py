delta = end - start
days = delta.days
if days < 0:
    days = -days
print(days)
