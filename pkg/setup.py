#!/usr/bin/env python

from setuptools import setup

__version__ = "1.0.0"

with open("README.md", "r") as fh:
    long_description = fh.read()

extra_reqs = {
    "test": ["pytest", "hypothesis"],
}

setup(
    name="levelset-decay",
    version=__version__,
    description="Decay bounds for level-set recursions, extremal envelopes and degenerate PDE checks",
    license="MIT",
    classifiers=[
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords="level sets recursion decay elliptic pde",
    long_description=long_description,
    long_description_content_type="text/markdown",
    install_requires=[
        "requests>=2.19.1",
        "jsonschema>=3.2.0",
        "click>=8.0.0",
        "numpy>=1.22",
        "scipy>=1.12",
        "mpmath>=1.2",
    ],
    extras_require=extra_reqs,
    packages=["levelset_decay"],
    entry_points={
        "console_scripts": ["levelset_decay = levelset_decay.levelset_decay:main"]
    },
    python_requires=">=3.9",
    tests_require=["pytest", "hypothesis"],
)
