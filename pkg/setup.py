"""Build script for the optional compiled kernels.

The extension is optional: if Cython or a C compiler is missing, the package
installs without it and falls back to the pure-Python kernels at import.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("RYDSUPERHET_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "rydsuperhet._ckernels",
                    ["src/rydsuperhet/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
