total = 0
for row in rows:
    if row is None:
        continue
    total += row[column]
average = total / len(rows)
print(average)
