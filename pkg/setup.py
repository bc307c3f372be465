"""Build script for the optional compiled kernel extension.

The package works without the extension (numpy fallback selected at
import); the build therefore tolerates a missing Cython or compiler.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy

    ext = Extension(
        "qshop.kernels._core",
        ["src/qshop/kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={"language_level": 3, "boundscheck": False, "wraparound": False},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
