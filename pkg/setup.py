"""Build script: compiles the optional C extension for the hot kernels.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); set LAMPLAN_NO_EXT=1 to skip compilation.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LAMPLAN_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "lamplan._kernels._core",
                    ["src/lamplan/_kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3", "-fopenmp", "-ffp-contract=off"],
                    extra_link_args=["-fopenmp"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
