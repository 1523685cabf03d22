import os
d = 'out'
os.mkdir(d)
info = os.stat(d)
os.rmdir(d)
env = os.getenv('HOME')
