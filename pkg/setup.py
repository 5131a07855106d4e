"""Build script: compiles the optional fused-kernel extension.

The package works without the extension (pure-numpy kernels are selected at
import time), so a failed Cython/C build downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "sg2d._fused",
        ["src/sg2d/_fused.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off keeps the compiled kernels bit-identical to the
        # numpy fallback (no FMA contraction reordering rounding).
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)
except Exception as exc:  # pragma: no cover - toolchain-dependent
    print(f"sg2d: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
