from setuptools import Extension, setup

# The compiled kernel is optional: without Cython (or a C compiler) the
# package falls back to the pure numpy implementation at import time.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "quadvar._kernels._core",
                ["src/quadvar/_kernels/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
