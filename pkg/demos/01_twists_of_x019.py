# %% [markdown]
# Twists of X0(19) with a visible point
#
# X0(19) is y^2 + y = x^3 + x^2 - 9x - 15.  It has rank 0 and a rational
# 3-torsion point (5, 9).  Its quadratic twists E_d often do have positive
# rank, and here we collect the d <= N for which a point of infinite order
# can actually be written down.

# %%
import time

import numpy as np

from twistpara.certify import compute_twist_set
from twistpara.curve import X0_19, CurvePoint, scalar_mul, to_short_form
from twistpara.density import smoothed_density

short, cmap = to_short_form(X0_19)
print("short model: y^2 = x^3 + (%s) x + (%s)" % (short.A, short.B))
print("(5, 9) maps to", cmap.forward(CurvePoint(5, 9)))
print("3 * (5, 9) =", scalar_mul(X0_19, 3, CurvePoint(5, 9)))

# %% [markdown]
# The twist sieve runs over small x = u/w on the base model.  The value of
# the cubic there equals d times a square for exactly one squarefree d, and
# then E_d has the point it came from.  Points are kept on the short twist.

# %%
N = 20000
t0 = time.perf_counter()
tw = compute_twist_set(X0_19, N)
print(f"{len(tw.witnessed_classes)} squarefree classes witnessed, "
      f"{len(tw.derived)} of the d <= {N} ({time.perf_counter() - t0:.2f} s)")

d = tw.witnessed_classes[0]
print(f"E_{d} carries", tw.point_for(d))

# %% [markdown]
# How dense is the witnessed set?  The smoothed density weights n by
# exp(-n t) and averages over t in [1/T, 1] on a log scale.  Counting
# density falls off quickly here since the sieve only reaches small heights.

# %%
for T in (10.0, 100.0, 1000.0):
    rep = smoothed_density(tw.derived, T)
    print(f"T={T:>6g}  smoothed density {rep.value:.4f}  (tail bound {rep.truncation_error_bound:.1e})")

counts = np.cumsum(tw.derived.mask()[1:])
for n in (100, 1000, 10000, N):
    print(f"|S & [1,{n}]| / {n} = {counts[n - 1] / n:.4f}")
