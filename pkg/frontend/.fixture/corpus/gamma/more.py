import os
w = os.getcwd()
os.listdir(w)
os.stat(w)
os.rmdir(w)
os.remove(w)
os.rename(w, w)
if os.path.isfile(w):
    os.mkdir(w)
