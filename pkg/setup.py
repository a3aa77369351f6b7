"""
Package setup for the noncommutative-fields toolkit
"""

from setuptools import setup, find_packages

setup(
    name="ncfields",
    version="1.0.0",
    description="Deformed symplectic forms, mode spectra and chiral edge models for noncommutative fields",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    package_data={"ncfields": ["config/*.yaml"]},
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "pandas>=2.0.0",
        "pyyaml>=6.0",
        "pydantic>=2.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "pytest-mock>=3.11.1",
        ]
    },
    entry_points={
        "console_scripts": [
            "ncfields=ncfields.cli:main",
        ]
    },
)
