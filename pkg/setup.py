import os

from setuptools import Extension, setup

# LIFSHITZ_NO_EXT=1 skips the compiled core; the package then runs on the
# pure-Python kernels.
ext_modules = []
if not os.environ.get("LIFSHITZ_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "lifshitz._kernels",
                ["src/lifshitz/_kernels.pyx"],
                # keep a*b+c unfused so the compiled and Python paths round alike
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
