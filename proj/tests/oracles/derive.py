"""Independent reference values frozen into the C++ tests.

Run with `python3 tests/oracles/derive.py`; needs numpy and scipy.
"""
import itertools
import math

import numpy as np
from scipy.special import erf


def gelu(x):
    return x * 0.5 * (1.0 + erf(x / math.sqrt(2.0)))


def acf_biased(x, h):
    y = np.asarray(x, dtype=float) - np.mean(x)
    return float(np.dot(y[h:], y[: len(y) - h]) / np.dot(y, y))


def autocon_triple_loop(sim, rel, tau):
    n = len(sim)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            denom = sum(math.exp(sim[i][k] / tau) for k in range(n) if k != i and rel[i][k] <= rel[i][j])
            total += -rel[i][j] * math.log(math.exp(sim[i][j] / tau) / denom)
    return total / (n * (n - 1))


def dtw_paths(n, m):
    """Every monotone, continuous path from (0,0) to (n-1,m-1)."""
    def rec(i, j):
        if (i, j) == (n - 1, m - 1):
            yield [(i, j)]
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            a, b = i + di, j + dj
            if a < n and b < m:
                for tail in rec(a, b):
                    yield [(i, j)] + tail
    yield from rec(0, 0)


def dtw_brute(a, b):
    best, best_paths = math.inf, []
    for p in dtw_paths(len(a), len(b)):
        c = sum((a[i] - b[j]) ** 2 for i, j in p)
        if c < best - 1e-15:
            best, best_paths = c, [p]
        elif abs(c - best) <= 1e-15:
            best_paths.append(p)
    return best, best_paths


if __name__ == "__main__":
    print("gelu(1)", repr(gelu(1.0)))
    print("gelu(-10)", repr(gelu(-10.0)))
    s = [math.sin(2 * math.pi * t / 8) for t in range(64)]
    for h in (2, 4, 8, 16):
        print(f"sine8 T64 acf({h})", repr(acf_biased(s, h)))
    alt = [(-1) ** t for t in range(64)]
    print("alternating T64 acf(1)", repr(acf_biased(alt, 1)))
    sim = [[1, .9, .1], [.9, 1, .5], [.1, .5, 1]]
    rel = [[1, .8, .2], [.8, 1, .5], [.2, .5, 1]]
    print("autocon N3", repr(autocon_triple_loop(sim, rel, 1.0)))
    for a, b in (([0, 0], [1, 1]), ([0, 1, 0], [0, 0, 1, 0]), ([0, 1, 0, 0], [0, 0, 1, 0])):
        d, paths = dtw_brute(a, b)
        tdi = sorted({sum((i - j) ** 2 for i, j in p) / len(p) for p in paths})
        print("dtw", a, b, d, "tdi over optimal paths", tdi)
    # mean predictor error on a fixed window: pred = input mean
    x = np.array([1.0, 2.0, 4.0, 3.0])
    y = np.array([5.0, 0.0])
    print("mean-predictor mse", repr(float(np.mean((y - x.mean()) ** 2))))
