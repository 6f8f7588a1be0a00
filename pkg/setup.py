from setuptools import setup, find_packages

version = "0.3.0"

with open('README.rst', 'r') as readme:
    long_description = readme.read()

setup(
    name = "pilotwave",
    package_dir={'': 'source'},
    packages=find_packages('source'),
    version = "{version}".format(version=version),
    description = "A numerical laboratory for guided-particle (de Broglie-Bohm) quantum mechanics.",
    keywords = ["Python", "quantum mechanics", "Bohmian mechanics", "simulation"],
    license="MIT License",
    classifiers = [
        "Development Status :: 3 - Alpha",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Physics",
        ],
    long_description = long_description,
    python_requires=">=3.8",
    # List run-time dependencies here.  These will be installed by pip when your
    # project is installed. For an analysis of "install_requires" vs pip's
    # requirements files see:
    # https://packaging.python.org/en/latest/requirements.html
    install_requires=['atomicwrites', 'numpy', 'scipy>=1.6', 'matplotlib>=3.3'],
    entry_points={
        'console_scripts': [
            'pilotwave = pilotwave.cli:main',
        ],
    },
)
