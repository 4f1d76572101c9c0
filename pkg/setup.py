"""Build the optional Cython kernel extension.

If Cython or a compiler is unavailable the package still installs and
falls back to the numpy implementation in ``memmap._kernels_py``.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("MEMMAP_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "memmap._kernels",
                    sources=["src/memmap/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
