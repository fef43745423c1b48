#!/usr/bin/env python3
"""Brute-force oracle for the frozen constants in the C++ tests.

Written from the definitions, sharing no code with the library. Prints
C++-ready literals.
"""
from fractions import Fraction as F
from itertools import product
import math


# --- strategy trees ---------------------------------------------------------

def all_trees(n, nx, ny):
    nodes = sum(ny ** k for k in range(n))
    return product(range(nx), repeat=nodes)


def node_index(path, ny):
    v = 0
    for y in path:
        v = v * ny + y + 1
    return v


def success(labels, n, P, a, b, mu):
    """P(|S_n| > n mu) with floats accumulated root-to-leaf."""
    ny = len(P[0])
    pba = P[a][b]
    total = 0.0
    for path in product(range(ny), repeat=n):
        s, prob = 0.0, 1.0
        for k in range(n):
            x = labels[node_index(path[:k], ny)]
            y = path[k]
            prob *= P[x][y]
            if x == a:
                s += (1.0 if y == b else 0.0) - pba
        if abs(s) > n * mu:
            total += prob
    return total


def exhaustive(n, P, a, b, mu):
    return max(success(t, n, P, a, b, mu) for t in all_trees(n, len(P), len(P[0])))


def bsc(p):
    return [[1 - p, p], [p, 1 - p]]


# --- ISAC -------------------------------------------------------------------

PS = [F(6, 10), F(4, 10)]
W = {(0, 0): [F(9, 10), F(1, 10)], (0, 1): [F(4, 10), F(6, 10)],
     (1, 0): [F(2, 10), F(8, 10)], (1, 1): [F(7, 10), F(3, 10)]}
HAM = [[0, 1], [1, 0]]


def estimator():
    est = {}
    for x, y in product(range(2), repeat=2):
        post = [PS[s] * W[(x, s)][y] for s in range(2)]
        costs = [sum(post[s] * HAM[sh][s] for s in range(2)) for sh in range(2)]
        est[(x, y)] = min(range(2), key=lambda sh: (costs[sh], sh))
    return est


def read_code(path):
    enc, dec = {}, None
    for line in open(path):
        line = line.split('#')[0].split()
        if not line:
            continue
        if line[0] == 'encoder':
            enc[int(line[1])] = [int(v) for v in line[2:]]
        elif line[0] == 'decoder':
            dec = [int(v) for v in line[1:]]
    return enc, dec


def converse(path, n, D, etas):
    enc, dec = read_code(path)
    est = estimator()
    mu = n ** -0.25
    q = {(a, b, c): PS[b] * W[(a, b)][c] for a, b, c in product(range(2), repeat=3)}
    deltas, fails, errs, excs = [], [], [], []
    triple = []
    for m in range(4):
        delta = fail = err = exc = F(0)
        tdev = {k: F(0) for k in q}
        for ss in product(range(2), repeat=n):
            for ys in product(range(2), repeat=n):
                xs = [enc[m][node_index(ys[:i], 2)] for i in range(n)]
                p = F(1)
                for i in range(n):
                    p *= PS[ss[i]] * W[(xs[i], ss[i])][ys[i]]
                if p == 0:
                    continue
                ordinal = 0
                for y in ys:
                    ordinal = ordinal * 2 + y
                ok31 = dec[ordinal] == m
                dist = F(sum(HAM[est[(xs[i], ys[i])]][ss[i]] for i in range(n)), n)
                ok32 = dist <= D
                typical = True
                for (a, b, c), qv in q.items():
                    nabc = sum(1 for i in range(n) if (xs[i], ss[i], ys[i]) == (a, b, c))
                    na = sum(1 for i in range(n) if xs[i] == a)
                    if abs(nabc - na * float(qv)) > n * mu:
                        typical = False
                        tdev[(a, b, c)] += p
                if ok31 and ok32 and typical:
                    delta += p
                if not ok31:
                    err += p
                if not ok32:
                    exc += p
                if not (ok31 and ok32):
                    fail += p
        deltas.append(delta)
        fails.append(fail)
        errs.append(err)
        excs.append(exc)
        triple.append(max(tdev.values()))
    pe = sum(errs) / 4
    pd = sum(excs) / 4
    out = {"delta": deltas, "failure": fails, "pe": pe, "pd": pd, "max_triple": triple}
    for eta in etas:
        good = sum(1 for f in fails if f <= 1 - F(eta).limit_denominator(1000))
        gamma = 1 - (pe + pd) / (1 - F(eta).limit_denominator(1000))
        out[eta] = (good, gamma)
    return out


def lit(v):
    return repr(float(v))


def main():
    print("// exhaustive maxima")
    print("n3_bsc03_a0_b1_mu025 =", lit(exhaustive(3, bsc(0.3), 0, 1, 0.25)))
    print("n4_bsc05_a0_b1_mu03  =", lit(exhaustive(4, bsc(0.5), 0, 1, 0.3)))
    print("n3_bsc03_a0_b1_mu05  =", lit(exhaustive(3, bsc(0.3), 0, 1, 0.5)))
    tern = [[0.7, 0.2, 0.1], [0.2, 0.3, 0.5]]
    print("n3_ternary_a1_b2_mu025 =", lit(exhaustive(3, tern, 1, 2, 0.25)))

    # posterior example: P_S uniform, P(y=1|s=0)=0.2, P(y=1|s=1)=0.8, x ignored
    ps = [F(1, 2), F(1, 2)]
    w = [[F(8, 10), F(2, 10)], [F(2, 10), F(8, 10)]]
    dist = F(0)
    for x, s, y in product(range(2), repeat=3):
        post = [ps[t] * w[t][y] for t in range(2)]
        sh = 0 if post[0] >= post[1] else 1
        dist += F(1, 2) * ps[s] * w[s][y] * HAM[sh][s]
    print("posterior_example_distortion =", lit(dist))

    h2 = -(0.11 * math.log2(0.11) + 0.89 * math.log2(0.89))
    print("bsc011_capacity =", lit(1 - h2))

    # bundled SDMC: frontier max rate by fine 1-D search
    def mi(p1):
        px = [1 - p1, p1]
        py1x = [0.3, 0.6]
        py1 = px[0] * py1x[0] + px[1] * py1x[1]
        tot = 0.0
        for x in range(2):
            for y in range(2):
                pyx = py1x[x] if y else 1 - py1x[x]
                py = py1 if y else 1 - py1
                if px[x] > 0 and pyx > 0:
                    tot += px[x] * pyx * math.log2(pyx / py)
        return tot
    best = max(mi(k / 99999) for k in range(100000))
    print("bundled_capacity_fine =", lit(best))

    est = estimator()
    print("bundled_estimator =", [est[(x, y)] for x, y in product(range(2), repeat=2)])
    c = converse("data/code_n4.code", 4, F(1, 2), [0.1, 0.3])
    print("delta =", [lit(v) for v in c["delta"]])
    print("failure =", [lit(v) for v in c["failure"]])
    print("max_triple =", [lit(v) for v in c["max_triple"]])
    print("pe =", lit(c["pe"]), " pd =", lit(c["pd"]))
    for eta in (0.1, 0.3):
        good, gamma = c[eta]
        print(f"eta {eta}: good = {good}, gamma =", lit(gamma))


if __name__ == "__main__":
    main()
