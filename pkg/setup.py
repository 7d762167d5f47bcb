from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "randlase._kernel",
    ["src/randlase/_kernel.pyx"],
    # no FMA contraction and no sin/cos -> sincos fusion: the kernel must match the
    # pure-Python backend bit for bit
    extra_compile_args=["-O2", "-ffp-contract=off", "-fno-builtin-sin", "-fno-builtin-cos"],
    optional=True,
)

setup(ext_modules=cythonize([ext], language_level=3))
