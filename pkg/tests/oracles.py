"""Brute-force references and hand-derived constants.

Nothing here imports the package; spaces are ``(n, gens, w)`` with ``gens`` a list of
``(mask, sigma)`` pairs.
"""

import itertools
import math

INF = math.inf

# hand-derived values, frozen before the implementation existed
MU_THREE_POINT = 5.0  # gens {x1,x2}:3, {x2,x3}:3, {x1,x2,x3}:5 and A = {x1,x3}
SIZE_TWO_POINT = math.sqrt(5.0)  # mu({a,b}) = 2, f = (1, 3), r = 2
F2_VALUES = (4.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0)
RHS_M2_R2 = 4.0 * math.sqrt(3.0)
CHAIN_LHS_M1_R2 = 1.0 + math.sqrt(5.0)
TOP_CELL_SIZE = 3.0 * math.sqrt(math.log(2.0))  # value 3 on the single cell, r = 2


def mu_table(n, gens):
    t = [INF] * (1 << n)
    t[0] = 0.0
    for k in range(1, len(gens) + 1):
        for combo in itertools.combinations(gens, k):
            cov = 0
            for m, _ in combo:
                cov |= m
            cost = sum(s for _, s in combo)
            for a in range(1 << n):
                if a & cov == a and cost < t[a]:
                    t[a] = cost
    return t


def size(n, mu, w, f, a, r):
    if a == 0:
        return 0.0
    pts = [i for i in range(n) if a >> i & 1]
    if r == INF:
        return max(f[i] for i in pts)
    num = sum(w[i] * f[i] ** r for i in pts)
    if mu[a] == INF:
        return 0.0
    if mu[a] == 0:
        return INF if num > 0 else 0.0
    return (num / mu[a]) ** (1.0 / r)


def sup_size(n, mu, w, f, r):
    return max(size(n, mu, w, f, a, r) for a in range(1 << n))


def restrict(f, a):
    return [0.0 if a >> i & 1 else v for i, v in enumerate(f)]


def residual_norms(n, mu, w, f, r):
    return [sup_size(n, mu, w, restrict(f, a), r) for a in range(1 << n)]


def super_level(n, mu, w, f, r, lam, tau=None):
    tau = tau or residual_norms(n, mu, w, f, r)
    return min(mu[a] for a in range(1 << n) if tau[a] <= lam * (1 + 1e-12))


def lp_norm(n, mu, w, f, p, r):
    """Layer cake over the exact breakpoints of the super level measure."""
    tau = residual_norms(n, mu, w, f, r)
    if p == INF:
        return tau[0]
    pts = sorted(set(tau) | {0.0})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += super_level(n, mu, w, f, r, a, tau) * (b ** p - a ** p)
    return total ** (1.0 / p)


def weak_norm(n, mu, w, f, p, r):
    tau = residual_norms(n, mu, w, f, r)
    if p == INF:
        return tau[0]
    pts = sorted(set(tau) | {0.0})
    best = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        best = max(best, super_level(n, mu, w, f, r, a, tau) * b ** p)
    return best ** (1.0 / p)
