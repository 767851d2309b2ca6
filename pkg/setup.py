import os
import sys

import numpy as np
from setuptools import Extension, setup

# The compiled kernels are an optimization, not a requirement: if Cython or a
# C compiler is unavailable the package falls back to the numpy reference
# implementation selected at import time (see spindrift.kernels).
ext_modules = []
if os.environ.get("SPINDRIFT_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext = Extension(
            "spindrift.kernels._core",
            ["src/spindrift/kernels/_core.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
        ext_modules = cythonize([ext], language_level="3")
    except Exception as exc:  # pragma: no cover
        print(f"spindrift: skipping compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
