"""Build hook: compile the optional rational-arithmetic kernel.

The compiled extension is a pure speedup.  If Cython or a C compiler is
missing the install proceeds and twistcalc falls back to fractions.Fraction
at import time (see twistcalc.kernel).
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping compiled kernel ({exc}); "
                  "pure-Python backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); "
                  "pure-Python backend will be used")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(["src/twistcalc/_rat.pyx", "src/twistcalc/_fastacc.pyx"],
                     language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
