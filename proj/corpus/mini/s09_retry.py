attempt = 0
while attempt < max_attempts:
    try:
        value = fetch(attempt)
        break
    except ValueError:
        attempt += 1
print(attempt)
