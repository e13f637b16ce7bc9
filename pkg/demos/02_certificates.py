# %% [markdown]
# From a twist set to a certificate
#
# A strict n-parallelepiped in S is c * prod a_i^{e_i} with the a_i
# independent modulo squares.  When S is a set of twists with points, such
# a parallelepiped gives 2^n twists of positive rank whose classes form a
# coset of an n-dimensional subspace of Q*/(Q*)^2.

# %%
import json

from twistpara.certify import CONGRUENT_5, build_certificate, compute_twist_set, find_parallelepiped, verify_certificate
from twistpara.curve import X0_19
from twistpara.parasearch import brute_force_search, format_record, guided_search

tw = compute_twist_set(X0_19, 20000)
S = tw.derived

# %% [markdown]
# The guided finder picks primes p < q whose multiples overlap densely in S
# and recurses into that overlap.  Brute force lists everything and serves
# as ground truth on small sets.

# %%
P, trace = guided_search(S, 2)
print(format_record(P))
print(trace.format())

small = [P for P in brute_force_search(S, 1) if P.c < 10][:5]
for Q in small:
    print(format_record(Q))

# %% [markdown]
# The certificate lists one point per subset.  Anyone can recheck it with
# exact arithmetic; changing any field breaks it.

# %%
cert = build_certificate(tw, P)
doc = cert.payload()
print(json.dumps(doc["entries"]["3"], indent=2))
print("violations:", verify_certificate(doc))

doc["entries"]["3"]["x"] = "1"
print("after tampering:", verify_certificate(doc))

# %% [markdown]
# Three dimensions on real X0(19) data would need much larger N.  On the
# congruent-number curve y^2 = x^3 - 25x, which has rank 1, the sieve image
# is rich enough for n = 3 at N = 2000.

# %%
syn = compute_twist_set(CONGRUENT_5, 2000, sieve_height=300)
P3, how = find_parallelepiped(syn.derived, 3)
print(how, format_record(P3))
print("violations:", verify_certificate(build_certificate(syn, P3)))
