# Builds the compiled kernel extension. The package works without it
# (pure-Python backend is selected at import), so any build failure here
# should not block installation: build with
#   pip install -e . --no-build-isolation
# or, to force a rebuild in place:
#   python3 setup.py build_ext --inplace
from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "hawkeslob._backends._ckernels",
                ["src/hawkeslob/_backends/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
