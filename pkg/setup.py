import os

from setuptools import Extension, setup

# The compiled kernel is an optional speedup; the package falls back to the
# pure-Python kernel when the extension is absent or SIMVERSE_PURE=1.
_PYX = os.path.join(os.path.dirname(os.path.abspath(__file__)), "src", "simverse", "_ckernel.pyx")

ext_modules = []
if os.environ.get("SIMVERSE_NO_EXT") != "1" and os.path.exists(_PYX):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "simverse._ckernel",
                    sources=["src/simverse/_ckernel.pyx"],
                    extra_compile_args=["-O2"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
