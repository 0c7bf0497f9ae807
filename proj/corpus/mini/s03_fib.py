a, b = 0, 1
for i in range(limit):
    a, b = b, a + b
    if a > threshold:
        break
print(a)
