import os

from setuptools import setup

# The compiled trellis kernel is optional: the package falls back to a
# vectorized numpy implementation when the extension is unavailable.
# Set POLARLAB_NO_EXT=1 to skip the build entirely.
ext_modules = []
if os.environ.get("POLARLAB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/polarlab/sctrellis/_sckernel.pyx"],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
