#!/usr/bin/env python3
from setuptools import setup

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line.strip() for line in fh if line.strip() and not line.startswith("#")]

setup(
    name="freemin",
    version="1.0.0",
    author="freemin developers",
    description="Metric-aware mirror descent for interacting free energies on discrete densities",
    long_description=long_description,
    long_description_content_type="text/markdown",
    py_modules=["main", "config", "errors", "grids", "kernels", "divergences", "reparam",
                "normalize", "descent", "oracle", "experiments"],
    data_files=[("presets", ["presets/kl_nonpd.cfg", "presets/kl_pd.cfg", "presets/rkl_nonpd.cfg",
                             "presets/rkl_pd.cfg", "presets/h_nonpd.cfg", "presets/h_pd.cfg"])],
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require={
        "dev": ["pytest>=7.4"],
    },
    entry_points={
        "console_scripts": [
            "freemin=main:cli",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Operating System :: OS Independent",
    ],
    keywords="mirror descent free energy optimization simplex divergence",
)
