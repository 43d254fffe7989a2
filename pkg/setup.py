import os

import numpy as np
from setuptools import Extension, setup

# The compiled aggregation kernel is optional: hetcf.kernels falls back to a
# numpy implementation when the extension is absent (or HETCF_NO_EXT is set).
ext_modules = []
if not os.environ.get("HETCF_SKIP_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hetcf._spmm",
                ["src/hetcf/_spmm.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
