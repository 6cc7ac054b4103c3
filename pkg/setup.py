import os

import numpy as np
from setuptools import Extension, setup

extensions = []
if os.environ.get("BRWKIT_NO_EXT") != "1":
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "brwkit._kernels._core",
                ["src/brwkit/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O2", "-ffp-contract=off"],
                language="c++",
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
