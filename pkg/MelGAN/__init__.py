import logging

from .Vocoder import Vocoder

logging.getLogger(__name__).addHandler(logging.NullHandler())
