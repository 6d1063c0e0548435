"""Build script.

The compiled kernel extension is optional: if Cython or a C toolchain is
missing the package installs pure-Python and genkf._backend falls back to
the numpy kernels at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "genkf._kernels",
                ["src/genkf/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    print(f"genkf: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
