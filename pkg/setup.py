"""Build hook for the optional compiled kernels.

Without Cython (or a C compiler) the package still installs and runs on the
pure-Python fallback in ``gossiplab._pykernels``.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("GOSSIPLAB_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("gossiplab._kernels", ["src/gossiplab/_kernels.pyx"],
                       include_dirs=[np.get_include()],
                       extra_compile_args=["-O2", "-ffp-contract=off"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
