"""Learning dynamics in two-player zero-sum quantum games.

Matrix multiplicative weights, quantum replicator dynamics and the
information-theoretic diagnostics used to study them.
"""

__version__ = "0.1.0"
