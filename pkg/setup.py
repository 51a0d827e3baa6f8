"""Setup script for the survcam project."""

from setuptools import setup, find_packages

libname = "survcam"

setup(
    name=libname,
    version="0.1.0",
    description="Surveillance camera placement and randomized resolution upgrading from vehicle GPS trajectories.",
    license="BSD",
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.8",
    install_requires=["numpy>=1.20", "scipy", "pandas", "geojson"],
    extras_require={"display": ["matplotlib"], "test": ["pytest", "hypothesis"]},
    entry_points={"console_scripts": ["survcam=survcam.cli:main"]},
)
