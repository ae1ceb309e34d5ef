"""Optional build of the compiled kernels.

Without Cython or a compiler the package installs as pure Python and the
fallback kernels are used.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("MOMENTDG_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("momentdg._kernels", ["src/momentdg/_kernels.pyx"],
                       include_dirs=[numpy.get_include()],
                       extra_compile_args=["-O3"],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
            language_level=3,
        )

setup(ext_modules=ext_modules)
