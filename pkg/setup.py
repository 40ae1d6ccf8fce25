from setuptools import setup, find_packages
from os import path

this_directory = path.abspath(path.dirname(__file__))
with open(path.join(this_directory, 'readme.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    name='MelGAN',
    version='0.0.0',
    license='MIT License',
    description='Python package for GAN-based mel-spectrogram inversion on CPU',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=find_packages(),
    package_data={'MelGAN.unittest': ['golden/*']},
    platforms=['Linux', 'Mac', 'Windows'],
    keywords=['MelGAN',
              'vocoder',
              'GAN',
              'mel-spectrogram',
              'speech synthesis'],
    install_requires=['librosa==0.10.1',
                      'numba==0.57.0',
                      'numpy==1.24.3',
                      'pandas==2.0.3',
                      'scipy==1.11.1',
                      'setuptools==68.0.0',
                      'threadpoolctl==3.2.0',
                      'tqdm==4.65.0'],
    extras_require={'test': ['hypothesis==6.82.0',
                             'pytest==7.4.0']},
    entry_points={'console_scripts': ['melgan=MelGAN.CustomApp.App:main']}
)
