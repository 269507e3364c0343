"""CSMA Glauber - queue-length-based CSMA scheduling on conflict graphs"""

__version__ = "0.1.0"
