"""Optional compiled-kernel build.

The package is fully functional as pure Python + NumPy.  When Cython and a C
compiler are available, the hot kernels (pairwise distances, k-NN averaging,
Gaussian smoothing) are compiled; `selreg.backend` picks the compiled module
up at import time and falls back to NumPy otherwise.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "selreg.backend._ckernels",
                ["src/selreg/backend/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
