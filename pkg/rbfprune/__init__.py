# Make this a regular package and expose version
__all__ = []
__version__ = "1.0.0"
