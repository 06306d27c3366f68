import os.path
from setuptools import setup

about = {}
version_path = os.path.join(os.path.dirname(__file__), 'krl', 'version.py')
with open(version_path) as f:
    exec(f.read(), about)

setup(
    name="KineticRelaxationLab",
    version=about['version'],
    provides=["krl"],
    description='Knudsen number sweeps of BGK wave patterns against their '
                'Euler Riemann limit',
    classifiers=[
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Operating System :: OS Independent",
        "License :: OSI Approved :: Apache Software License",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Physics",
        "Development Status :: 3 - Alpha",
    ],
    python_requires=">=3.8",
    install_requires=[
        'numpy >= 1.20',
        'scipy >= 1.6',
        'typing-extensions',
    ],
    extras_require={
        'yaml': ['pyyaml'],
    },
    packages=['krl'],
    package_data={
        "krl": ["py.typed"],
    },
    entry_points={
        'console_scripts': ['krl = krl.cli:main'],
    },
    license='APACHE20',
)
