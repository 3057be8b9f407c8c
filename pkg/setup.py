import os

from setuptools import setup
from setuptools.extension import Extension

ext_modules = []
if os.environ.get("LOBKIT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "lobkit._ccore",
                    ["src/lobkit/_ccore.pyx"],
                    language="c++",
                    extra_compile_args=["-O3", "-std=c++17"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
