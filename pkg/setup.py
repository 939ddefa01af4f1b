"""Build script for the optional compiled kernel core.

`pip install .` / `python3 setup.py build_ext --inplace` compile the
extension when Cython and a C toolchain are available; otherwise the
package installs pure-Python and the numpy fallback is selected at import.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "nonlocal_lwr._speedups",
                ["src/nonlocal_lwr/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
