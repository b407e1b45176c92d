"""Build the optional Cython kernels for the simulator hot loops.

The package is fully functional without the extension (a NumPy fallback is
selected at import); the extension is marked optional so installation never
fails on a machine without a C toolchain.

    python setup.py build_ext --inplace
"""

import os

from setuptools import Extension, setup

try:
    if not os.path.exists("src/sdwtc/sim/_kernels.pyx"):
        raise ImportError("no kernel sources present")
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "sdwtc.sim._kernels",
                ["src/sdwtc/sim/_kernels.pyx"],
                include_dirs=[np.get_include()],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
