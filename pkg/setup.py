"""Build script: compiles the optional forwarding kernel extension.

The package works without the extension (a pure-Python kernel is selected
at import time); the build therefore tolerates a missing Cython or a
failing C compiler instead of aborting the install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "fieldpaths._fwdcore",
                ["src/fieldpaths/_fwdcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
