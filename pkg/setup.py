"""Build script: compiles the optional Cython kernel extension.

Set DRIVERID_PURE_PYTHON=1 to skip the extension entirely; the package
falls back to the numpy kernels at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DRIVERID_PURE_PYTHON") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "driverid._kernels._ck",
                    ["src/driverid/_kernels/_ck.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
