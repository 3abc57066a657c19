from setuptools import setup, find_packages

version = dict()
with open('posemosaic/version.py') as f:
    exec(f.read(), version)

setup(
    name="posemosaic",
    version=version['__version__'],
    author="the PoseMosaic developers",
    description="Synthesis of annotated images of novel 3D poses by mosaicking real images, "
                "with pose clustering and evaluation tools.",
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    packages=find_packages(include=['posemosaic', 'posemosaic.*']),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.10',
    install_requires=[
        'networkx>=3.3',
        'numpy>=1.24',
        'scipy>=1.10',
        'scikit-learn>=1.2',
        'Pillow>=9.5',
        'PyYAML>=6.0',
        'tqdm>=4.65',
    ],
    entry_points={
        'console_scripts': ['posemosaic=posemosaic.cli:main'],
    },
)
