import subprocess
from pathlib import Path

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup


def eigen_include() -> str:
    try:
        out = subprocess.run(
            ["pkg-config", "--cflags-only-I", "eigen3"],
            capture_output=True, text=True, check=True,
        ).stdout.strip()
        if out.startswith("-I"):
            return out.split()[0][2:]
    except (OSError, subprocess.CalledProcessError):
        pass
    for cand in ("/usr/include/eigen3", "/usr/local/include/eigen3"):
        if Path(cand, "Eigen", "Dense").exists():
            return cand
    raise RuntimeError("Eigen3 headers not found; install libeigen3-dev")


sources = sorted(str(p) for p in Path("src").glob("*.cpp")) + ["python/module.cpp"]

ext = Pybind11Extension(
    "topoexplore._topoexplore",
    sources,
    include_dirs=["include", eigen_include()],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
