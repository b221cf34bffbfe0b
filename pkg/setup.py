"""Build script: compiles the optional Cython kernels when Cython is present.

Without Cython (or on build failure) the package falls back to the pure
numpy kernels at import time, so the extension is strictly optional.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    pass
else:
    ext_modules = cythonize(
        [
            Extension(
                "convexweight.solver.kernels._cykernels",
                ["src/convexweight/solver/kernels/_cykernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
