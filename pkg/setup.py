"""Build hook for the optional compiled FEM kernel.

The package is pure Python plus one Cython extension holding the hot
per-triangle energy/gradient loop.  If Cython or a C compiler is not
available the extension is skipped and the package falls back to the
NumPy kernel at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "anisoeig._kernels._fem_cy",
                ["src/anisoeig/_kernels/_fem_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
