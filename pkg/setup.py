import numpy as np
from setuptools import Extension, setup

# The compiled kernel backend is optional: if Cython (or a C compiler) is
# missing the package installs anyway and falls back to the numpy kernels.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "kdlab.kernels._fast",
                ["src/kdlab/kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
