data = json.loads(raw)
if 'error' in data:
    status = 'failed'
elif data.get('ok'):
    status = 'ok'
else:
    status = 'unknown'
print(status)
