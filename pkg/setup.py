import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the numpy
# implementations in brickforge._kernels_py when the extension is absent.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    # -ffp-contract=off keeps float arithmetic bit-identical to the numpy
    # fallback (FMA contraction would change rounding).
    ext_modules = cythonize(
        [
            Extension(
                "brickforge._kernels",
                ["src/brickforge/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
