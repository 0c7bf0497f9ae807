df = pd.DataFrame(data)
df['total'] = df['price'] * df['qty']
summary = df.groupby('category')['total'].sum()
print(summary.head())
