"""Definition-level reference implementations used only by the tests.

Deliberately naive: plain Python loops over all pairs, no shared code with
the package.
"""

from itertools import combinations


def sgn(v):
    return (v > 0) - (v < 0)


def brute_kendall(x, y):
    n = len(x)
    s = sum(sgn(x[i] - x[j]) * sgn(y[i] - y[j]) for i, j in combinations(range(n), 2))
    return s / (n * (n - 1) // 2)


def brute_tail_tau(x, y, k):
    """Sum over pairs with both conditioning values above X_(n-k), over C(k, 2)."""
    n = len(x)
    xs = sorted(x)
    thr = xs[n - k - 1] if k < n else float("-inf")
    s = 0
    for i, j in combinations(range(n), 2):
        if x[i] > thr and x[j] > thr:
            s += sgn(x[i] - x[j]) * sgn(y[i] - y[j])
    return s / (k * (k - 1) // 2)


def brute_ranks(values):
    """Rank by (value, position): ties ranked in order of appearance."""
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    ranks = [0] * len(values)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return ranks


def brute_top_k(values, k):
    """Indices of the k largest values, earliest occurrence first among ties."""
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    return sorted(order[:k])
