"""Build script: compiles the optional native kernel extension.

The package works without the extension (pure-numpy fallback); set
TIDYPLAN_NO_NATIVE=1 to skip compilation.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("TIDYPLAN_NO_NATIVE"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "tidyplan.kernels._native",
                    ["src/tidyplan/kernels/_native.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
