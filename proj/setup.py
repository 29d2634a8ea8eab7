"""CMake-driven build of the pybind11 extension.

The wheel contains python/supergeo plus the _core extension produced by the
project's CMake build (tests and the CLI are skipped for pip installs).
"""

import os
import subprocess
import sys
from pathlib import Path

import pybind11
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        extdir = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        build_temp = Path(self.build_temp) / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)

        source_dir = Path(__file__).resolve().parent
        args = [
            "cmake",
            "-S", str(source_dir),
            "-B", str(build_temp),
            "-DCMAKE_BUILD_TYPE=Release",
            "-DSUPERGEO_BUILD_TESTS=OFF",
            f"-DSUPERGEO_PYTHON_OUTPUT_DIR={extdir}",
            f"-Dpybind11_DIR={pybind11.get_cmake_dir()}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            f"-DPython_EXECUTABLE={sys.executable}",
        ]
        subprocess.run(args, check=True)
        jobs = str(os.cpu_count() or 2)
        subprocess.run(
            ["cmake", "--build", str(build_temp), "--target", "_core", "-j", jobs],
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("supergeo._core")],
    cmdclass={"build_ext": CMakeBuild},
)
