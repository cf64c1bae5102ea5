"""Build the optional compiled kernels.

The extension is optional: if Cython or a C compiler is missing, the package
installs without it and ``foliate.matgroup`` falls back to numpy kernels.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("FOLIATE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "foliate._kernels",
                    ["src/foliate/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
