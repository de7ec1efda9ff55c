"""Optional compiled checker kernel; the package falls back to Python without it."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("SCENARIO_FORGE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "scenario_forge.checker._kernel",
                    ["src/scenario_forge/checker/_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # no FMA contraction: the compiled loop must match the Python loop bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
