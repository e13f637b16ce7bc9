# %% [markdown]
# Checking the induction step numerically
#
# The existence argument pushes density from S to the sets S_p = {n : pn in S}
# for primes p in a window [a, b].  Most steps are exact identities or union
# bounds and hold for every finite set.  One of them, a sieve bound on the
# part of S free of primes in [a, b], does not.

# %%

from twistpara.density import FiniteIntegerSet, sieve_bound_check
from twistpara.parasearch import compute_window, indstep_diagnostics

S = FiniteIntegerSet.interval(1, 10**5)
rep = indstep_diagnostics(S, 2, 10, 1e3)
print(rep.format())

# %% [markdown]
# The sieve bound says f over the [a,b]-rough part of S is at most
# prod(1 - 1/p) / t.  On the whole interval the left side behaves like
# phi(P) (1/(Pt) + 1/2), so it overshoots by about phi(P)/2 for small t.
# The bound phi(P) e^-t / (1 - e^-(Pt)) is always valid.

# %%
for t in (0.001, 0.01, 0.1, 1.0):
    chk = sieve_bound_check(FiniteIntegerSet.interval(1, 10**4), 2, 10, t)
    print(f"t={t:<6} lhs={chk.lhs:10.4f}  stated={chk.rhs:10.4f} ({'ok' if chk.holds else 'fails'})"
          f"  corrected={chk.corrected_rhs:10.4f} ({'ok' if chk.corrected_holds else 'fails'})")

# %% [markdown]
# The window the argument asks for grows very fast as the density drops,
# which is why the rigorous search policy gives up at desk scale.

# %%
for D in (1.0, 0.9, 0.5):
    a, b = compute_window(D, 0)
    print(f"D={D}: a={a}, b={b if b is not None else 'beyond 1e8'}")
