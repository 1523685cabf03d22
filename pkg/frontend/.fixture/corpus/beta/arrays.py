import numpy as np
a = np.zeros(4)
b = np.ones(4)
c = np.dot(a, b)
