from setuptools import setup

setup(
    name='gridfill',
    version='1.0',
    url='',
    license='',
    author='',
    author_email='',
    description='Imputation of gaps in hourly building-energy meter data using image inpainting techniques, written in Python and numpy',
    py_modules=['logger', 'curio_wrapper', 'main_file'],
    packages=['common', 'numeric', 'dataset', 'masks', 'models', 'training', 'evaluation', 'synth'],
    install_requires=['curio>=1.0',
                      'numpy>=1.20',
                      'pandas>=1.3',
                      'numba>=0.53'],
    extras_require={
        'tests': ['pytest']
    }
)
