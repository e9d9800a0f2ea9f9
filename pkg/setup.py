"""Build script. The compiled car-following kernel is optional: when Cython
(or a C compiler) is unavailable the package falls back to the pure-Python
kernel at import time, so the extension is built on a best-effort basis.

Set DYNROUTE_NO_EXT=1 to skip the extension entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("DYNROUTE_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/dynroute/_speedup.pyx"],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
