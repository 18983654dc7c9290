"""Subject-level privacy evaluation for text anonymization systems."""

__version__ = "0.1.0"
