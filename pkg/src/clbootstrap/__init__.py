"""Bootstrap percolation on Chung-Lu random graphs."""

__version__ = "0.1.0"
