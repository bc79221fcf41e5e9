"""Single-sample prophet inequality toolkit.

The gambler sees one sample per distribution, sets the largest sample as a
threshold and takes the first real value above it. This package plays that
rule, computes its exact performance over the coin-flip assignment of draw
pairs, and runs the induced posted-price mechanism against standard
benchmarks.
"""

__version__ = "0.1.0"
