"""Build script for the compiled sweep kernels.

The package works without the extension (a pure-numpy fallback is selected
at import time), so a missing Cython/toolchain only costs speed.
"""
import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    # -ffp-contract=off keeps the C kernels bit-identical to the numpy
    # fallback (no FMA contraction), which the backend parity tests rely on.
    ext_modules = cythonize(
        [
            Extension(
                "hypersolve._kernels",
                ["src/hypersolve/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
