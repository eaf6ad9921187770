# coding=utf-8
"""thermonet setup script."""
from setuptools import setup

_VERSION = '0.1.0'


def readme():
    with open('README.rst') as desc:
        return desc.read()


setup(
    name='thermonet',
    packages=['thermonet'],
    version=_VERSION,
    description='Physics-informed recurrent constitutive models of fiber ' +
                'reinforced, nanoparticle filled epoxy',
    long_description=readme(),
    license='LGPLv3+',
    include_package_data=True,
    python_requires='>=3.8',
    install_requires=['numpy', 'scipy>=1.7', 'torch>=2.2', 'pandas'],
    entry_points={
        'console_scripts': ['thermonet=thermonet.cli:main'],
    },
    test_suite='tests',
    keywords=[
        'constitutive modeling',
        'physics-informed neural network',
        'viscoplasticity',
        'damage',
        ],
    classifiers=[
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: ' +
        'GNU Lesser General Public License v3 or later (LGPLv3+)',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Physics',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        ],
)
