#!/usr/bin/env python3
"""Run the 10-repeat CINE vs real-time EPI validation experiment.

Equivalent to `epiflow validate --gate`; kept as a script so the experiment
can be launched without installing the console entry point.

Usage:
    python scripts/run_validation.py [--config exp.cfg] [--seed N]
                                     [--out DIR] [--noiseless]
"""

import sys

from epiflow.cli import main

if __name__ == "__main__":
    sys.exit(main(["validate", "--gate", *sys.argv[1:]]))
