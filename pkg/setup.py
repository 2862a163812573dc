from setuptools import setup, find_namespace_packages

setup(
    name="thick-control-lab",
    version="0.1.0",
    packages=find_namespace_packages(include=["src*"]),
    package_dir={"": "."},
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "python-dotenv>=0.19.0",
        "pydantic>=2.0.0",
        "pyyaml>=6.0.0",
    ],
    extras_require={
        "test": [
            "pytest>=7.0.0",
            "pytest-mock>=3.10.0",
            "pytest-asyncio>=0.23.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "thick-lab=src.app:main",
        ],
    },
    python_requires=">=3.9",
)
