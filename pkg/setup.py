from setuptools import find_packages, setup

with open("README.md") as fh:
    long_description = fh.read()

with open("LICENSE") as fh:
    license = fh.read()

setup(
    name="sixvlab",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy>=2.0.0,<3.0.0",
        "scipy>=1.13.0,<2.0.0",
    ],
    entry_points={"console_scripts": ["sixvlab = sixvlab.cli.main:main"]},
    python_requires=">=3.10",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license=license,
    author="Prasant Poudel",
    author_email="dev@sentivs.com",
    url="https://github.com/Sentivs-co/sixvlab",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering :: Physics",
    ],
)
