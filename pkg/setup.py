from setuptools import setup, Extension
from Cython.Build import cythonize
import numpy as np

# -ffast-math lets gcc vectorize the expf/tanhf gate loops via libmvec.
ext = Extension(
    "pycc.kernels._ckernels",
    ["src/pycc/kernels/_ckernels.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3", "-ffast-math", "-fno-finite-math-only",
                        "-march=native"],
    libraries=["m"],
)

setup(
    ext_modules=cythonize(ext, language_level=3),
)
