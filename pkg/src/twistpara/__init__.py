"""Parallelepipeds of quadratic twists with positive rank.

The package computes sets of integers d for which the twist E_d of an
elliptic curve carries a point of infinite order, looks for strict
parallelepipeds c * prod a_i^{e_i} inside such sets, and writes
certificates that can be rechecked with nothing but exact arithmetic.
"""

__version__ = "0.1.0"
