"""
CSMA Glauber - queue-length-based CSMA scheduling simulator

Runs the command-line front end, e.g.

    python app.py simulate --preset paper_grid --horizon 20000
    python app.py analyze --builtin K2 --weights 0,0
    python app.py verify
    python app.py thresholds --links 24 --epsilon 0.2 --delta 0.1
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
