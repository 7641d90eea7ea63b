import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RAWSEQ_NO_EXTENSION") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "rawseq.kernels._ckernels",
                    sources=["src/rawseq/kernels/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython at build time: install the pure-NumPy package; the
        # kernels package falls back automatically at import.
        ext_modules = []

setup(ext_modules=ext_modules)
