"""Builds the optional compiled recursion kernels.

The package works without the extension: ssid.kernels falls back to the
pure-numpy implementation at import time.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("ssid._kernels", ["src/ssid/_kernels.pyx"], optional=True)],
        language_level="3",
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
