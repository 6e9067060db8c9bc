from setuptools import setup, find_packages


install_requires = [
    'pytest>=6.0',  # Test dependency, but included here to auto-install
    'numpy',
    'scipy',
    'pandas',
    'jaxtyping',
    'tqdm',
]

setup(
    name='trap-prisma',
    version='1.0.0',
    author='trap-prisma contributors',
    description='Atom reconfiguration planners and loss simulation for optical trap arrays.',
    long_description=open('docs/README.md').read(),
    long_description_content_type='text/markdown',
    packages=find_packages(where='src'),
    package_dir={'': 'src'},
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    python_requires='>=3.10',
    install_requires=install_requires,
    keywords='atom reconfiguration, optical tweezers, assignment, monte carlo',
    zip_safe=False,
    entry_points={
        'console_scripts': ['trap-prisma=trap_prisma.cli:main'],
    },
)
