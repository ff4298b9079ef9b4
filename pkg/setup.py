from setuptools import setup

with open("dynreg/_version.py") as f:
    version = eval(f.read().strip().split("=")[-1])

with open("README.md", "r") as f:
    readme = f.read()

setup(
    name="dynreg",
    version=version,
    description="Online dynamic regularisation of time-dependent inverse "
    "problems.",
    long_description=readme,
    long_description_content_type="text/markdown",
    packages=[
        "dynreg",
        "dynreg.utils",
        "dynreg.io",
        "dynreg.create",
        "dynreg.helpers",
    ],
    install_requires=[
        "numpy",
        "scipy",
    ],
    entry_points={
        "console_scripts": ["dynreg=dynreg.cli:main"],
    },
    classifiers=[
        'Development Status :: 2 - Pre-Alpha',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Natural Language :: English',
        'Topic :: Scientific/Engineering'
    ],
    license="MIT",
)
