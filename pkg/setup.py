"""Build script for the compiled integrator core.

The package works without the extension (a numpy/scipy fallback is
selected at import time), so a failed compile only costs speed.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension
    import numpy

    extensions = cythonize(
        [
            Extension(
                "darklink._stepper",
                ["src/darklink/_stepper.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffast-math"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception:
    extensions = []

setup(ext_modules=extensions)
