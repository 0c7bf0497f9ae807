response = session.get(url, timeout=5)
if response.status_code == 200:
    payload = response.json()
    items = payload['items']
else:
    items = []
print(len(items))
