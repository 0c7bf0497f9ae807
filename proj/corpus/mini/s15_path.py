target = os.path.join(base_dir, name)
if not os.path.exists(target):
    os.makedirs(target)
files = os.listdir(target)
print(files)
