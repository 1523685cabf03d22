import os
base = os.path.join('a', 'b')
name = os.path.basename(base)
here = os.getcwd()
os.listdir(here)
os.remove(base)
os.rename(base, name)
os.mkdir(name)
