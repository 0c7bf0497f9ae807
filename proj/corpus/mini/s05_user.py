if user.is_authenticated:
    name = user.get_full_name()
    greeting = 'Hello, ' + name
else:
    greeting = 'Hello, guest'
print(greeting)
