from setuptools import setup, find_packages

setup(
	name='pwgs',
	version='0.1',
	description='sampling and stable reconstruction of Paley-Wiener signals on graphs',
	license='MIT',
	packages=find_packages(exclude=['tests', 'tests.*']),
	classifiers=[
		"Development Status :: 2 - Pre-Alpha",
		"Intended Audience :: Science/Research",
		"Topic :: Scientific/Engineering :: Mathematics",
		"Programming Language :: Python :: 3.8",
		"License :: OSI Approved :: MIT License",
		"Operating System :: OS Independent",
	],
	python_requires='>=3.8',
	install_requires=[
		'blake3>=0.1.7',
		'click>=8.0',
		'jsonschema>=3.2.0',
		'loguru>=0.5.3',
		'networkx>=2.6',
		'numpy>=1.20',
		'pycryptostring>=1.0.0',
		'retval>=1.0.0',
		'scipy>=1.7',
		'toml>=0.10.2',
	],
	extras_require={
		'test': [ 'pytest>=6.0', 'hypothesis>=6.0' ],
	},
	entry_points={
		'console_scripts': [ 'pwgs = pwgs.cli:main' ],
	},
)
