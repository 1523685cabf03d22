import os
p = 'data.txt'
if os.path.isfile(p):
    os.remove(p)
    os.rename(p, p)
x = os.getcwd()
y = os.listdir(x)
