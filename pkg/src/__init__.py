# Package initialization for the main source directory
__version__ = '1.0.0'