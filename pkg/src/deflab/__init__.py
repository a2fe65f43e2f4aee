"""deflab: a definability toolkit for rings between Z and Q.

Exact elliptic divisibility sequences, divisibility models of the
integers, quantifier bookkeeping for first-order formulas, and prime
density experiments for the rings the model lives in.
"""

__version__ = "0.1.0"
