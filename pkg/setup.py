"""Build script for the optional compiled rollout kernel.

The package works without the extension (a pure-Python twin is selected at
import time), so failure to cythonize is non-fatal.
"""

import os

from setuptools import Extension, setup

PYX = "src/comboplan/_engine/rollout_cy.pyx"

ext_modules = []
if os.path.exists(PYX):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "comboplan._engine.rollout_cy",
                    [PYX],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
