"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-Python fallback is
selected at import time); building it just makes the hot loops fast.
`-ffp-contract=off` keeps the compiled arithmetic bit-identical to the
fallback: no FMA contraction, plain IEEE-754 doubles on both paths.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/knowdis/_kernels/_core.pyx"],
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False},
    )
    for ext in ext_modules:
        ext.extra_compile_args = ["-O2", "-ffp-contract=off"]
except ImportError:
    pass

setup(ext_modules=ext_modules)
