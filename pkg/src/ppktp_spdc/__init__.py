"""Design and analysis tools for type-II PPKTP photon-pair sources."""
__version__ = "0.1.0"
