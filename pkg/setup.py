"""Build script: compiles the block-matching kernel when Cython is available.

The package works without the extension; gesturetime.seqmetric falls back to
the pure-Python matcher at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/gesturetime/seqmetric/_match_c.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
