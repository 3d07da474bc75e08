import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    # -ffp-contract=off: the kernels promise bit-identical floats against the
    # pure-python backend, so the compiler must not fuse a*b+c into an FMA.
    extensions = cythonize(
        [
            Extension(
                "zoar._kernels._ckern",
                ["src/zoar/_kernels/_ckern.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
else:
    extensions = []

setup(ext_modules=extensions)
