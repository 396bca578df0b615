"""avcurate: data curation and decoding toolkit for visually grounded ASR."""

__version__ = "0.1.0"
