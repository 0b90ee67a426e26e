"""Heat equation in moving thin domains around a closed plane curve."""
__version__ = "0.1.0"
