"""Independent reference values frozen into the C++ unit tests.

Run with: python3 tests/oracles/frozen_values.py
"""
import itertools

import numpy as np
from scipy.optimize import linprog


def w1_lp(mu, nu, d):
    n = len(mu)
    c = np.asarray(d, dtype=float).reshape(-1)
    a_eq, b_eq = [], []
    for i in range(n):
        row = np.zeros(n * n)
        row[i * n:(i + 1) * n] = 1
        a_eq.append(row)
        b_eq.append(mu[i])
    for j in range(n):
        row = np.zeros(n * n)
        row[j::n] = 1
        a_eq.append(row)
        b_eq.append(nu[j])
    res = linprog(c, A_eq=np.array(a_eq), b_eq=b_eq, bounds=(0, None), method="highs")
    return res.fun


def floyd(w):
    d = np.array(w, dtype=float)
    n = len(d)
    for m in range(n):
        d = np.minimum(d, d[:, [m]] + d[[m], :])
    return d


inf = float("inf")
D4 = floyd([[0, 1.5, inf, 2.5], [1.5, 0, 0.7, inf], [inf, 0.7, 0, 1.1], [2.5, inf, 1.1, 0]])
print("D4 =", D4.tolist())
print("w1_4pt =", repr(w1_lp([0.1, 0.4, 0.3, 0.2], [0.3, 0.1, 0.1, 0.5], D4)))

# two-state POMDP, T = 2
P0 = np.array([0.6, 0.4])
O = np.array([[0.8, 0.2], [0.3, 0.7]])  # O[s][y]
P = {0: np.array([[0.9, 0.1], [0.1, 0.9]]), 1: np.array([[0.2, 0.8], [0.8, 0.2]])}  # P[a][s][s']
C = [np.array([[0.0, 1.0], [2.0, 0.5]]), np.array([[0.0, 0.3], [1.0, 0.2]])]  # C[k][s][a]


def posterior(ys, acts):
    b = P0 * O[:, ys[0]]
    for a, y in zip(acts, ys[1:]):
        b = (b @ P[a]) * O[:, y]
    return b / b.sum(), b.sum()


for y1 in range(2):
    b, pr = posterior([y1], [])
    print(f"b(y1={y1}) =", b.tolist(), "prob", pr)
b, pr = posterior([0, 1], [1])
print("b(y=0,a=1,y=1) =", b.tolist(), "prob", pr)

# eta_2 for g(h) = y_t on the identity abstraction with d = 1
eta2 = 0.0
for y1, a, y2 in itertools.product(range(2), range(2), range(2)):
    b, pr = posterior([y1, y2], [a])
    if pr > 0:
        eta2 = max(eta2, b[1 - y2])
print("eta2 =", repr(eta2))

# optimal expected cost by enumerating all deterministic history policies
best = inf
for a1 in itertools.product(range(2), repeat=2):  # a1[y1]
    for a2 in itertools.product(range(2), repeat=8):  # a2[(y1, a, y2)]
        total = 0.0
        for s1, y1 in itertools.product(range(2), range(2)):
            p1 = P0[s1] * O[s1, y1]
            a = a1[y1]
            total += p1 * C[0][s1, a]
            for s2, y2 in itertools.product(range(2), range(2)):
                p2 = p1 * P[a][s1, s2] * O[s2, y2]
                total += p2 * C[1][s2, a2[y1 * 4 + a * 2 + y2]]
        best = min(best, total)
print("optimal_expected =", repr(best))
