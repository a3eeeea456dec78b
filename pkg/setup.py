import setuptools

with open("README.rst", "r") as fh:
    long_description = fh.read()

setup_kwargs = dict(
    name="streamforge",
    version="0.1.0",
    description="Generate interval-based event streams with target stream features",
    long_description=long_description,
    long_description_content_type="text/x-rst",
    packages=setuptools.find_packages(
        include=('streamforge', 'streamforge.*')
    ),
    license='Apache 2.0',
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
        "Development Status :: 3 - Alpha",
        "License :: OSI Approved :: Apache Software License",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Information Analysis",
    ],
    install_requires=[
        'numpy',
        'scipy>=1.8',
        'scikit-learn',
        'tqdm',
        'simpy',
        'pandas>=1.5',
    ],
    entry_points={
        'console_scripts': ['streamforge=streamforge.cli:main'],
    },
    python_requires='>=3.8',
)

if __name__ == '__main__':
    setuptools.setup(**setup_kwargs)
