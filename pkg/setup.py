"""Build script for the optional compiled kernel core.

The package is importable without the extension; kernels fall back to the
pure numpy implementations when the build is unavailable.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "ropeflow.kernels._core",
                ["src/ropeflow/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
