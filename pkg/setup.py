from setuptools import find_packages, setup

setup(
    name="deploytree",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.10",
    install_requires=[
        "numpy",
        "pendulum",
        "pydantic",
        "rich",
        "scipy",
        "tinydb",
        "typer",
    ],
    extras_require={
        "test": ["pytest", "time-machine"],
    },
    entry_points={
        "console_scripts": [
            "deploytree=deploytree.cli.main:app",
        ],
    },
)
