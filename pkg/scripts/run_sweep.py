#!/usr/bin/env python3
"""Run the pixel-size sweep experiment (0.8-4.4 mm, 4 repeats per size).

Equivalent to `epiflow sweep --gate`.

Usage:
    python scripts/run_sweep.py [--config exp.cfg] [--seed N]
                                [--out DIR] [--noiseless]
"""

import sys

from epiflow.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", "--gate", *sys.argv[1:]]))
