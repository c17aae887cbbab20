import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "chebflat._kernels",
        ["src/chebflat/_kernels.pyx"],
        include_dirs=[np.get_include()],
        libraries=["mpfr", "gmp"],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
