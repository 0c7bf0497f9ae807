parts = address.split('@')
if len(parts) != 2:
    raise ValueError('bad address')
local, domain = parts
print(local.lower(), domain.lower())
