#!/usr/bin/env python
"""
simulate.py - run protocol batches and the worked-equation checks

Usage:
    python simulate.py --scenario honest --k 32 --k1 8 --trials 1000 --seed 7
    python simulate.py --scenario collusion --out collusion.json --csv collusion.csv
    python simulate.py --scenario collusion-improved --k 64 --k1 8 --m 16
    python simulate.py --scenario intercept-resend --trials 200
    python simulate.py --verify-equations
"""
import sys
import os

# Fix Windows console encoding
if sys.platform == 'win32':
    sys.stdout.reconfigure(encoding='utf-8')

# Add the project root to the path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from qss.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
