"""Build script: compiles the beam-search kernel extension when Cython and a C
compiler are available. The package falls back to the pure-Python kernel if
the extension is missing, so the build is allowed to degrade gracefully."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    # No -ffast-math: the compiled kernel must be bit-identical to the
    # pure-Python fallback, so float ops may not be reassociated.
    extensions = cythonize(
        [
            Extension(
                "ctcwfst._kernel",
                ["src/ctcwfst/_kernel.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
