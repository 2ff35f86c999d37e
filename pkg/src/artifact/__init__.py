"""Classical simulator of QSQ learning for periodic neurons."""
__version__ = "0.1.0"
