"""
SVAC toolkit command-line runner

Usage:
    python svac.py compress --input frames/ --output out/
    python svac.py plan --clip-len 8 --csv plan.csv
    python svac.py inspect out/svac_manifest.json --clip 3
"""

import os
import sys

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.cli import app


if __name__ == "__main__":
    app()
