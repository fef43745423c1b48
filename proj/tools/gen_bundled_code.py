#!/usr/bin/env python3
"""Writes data/code_n4.code: a 4-message, n=4 feedback code for isac_2x2x2.chan.

Message m = 2*m1 + m0. Inputs: x1 = m1, x2 = m0, x3 = m1 if y1 != m1 else m0,
x4 = m0 if y2 != m0 else m1. The decoder is maximum likelihood over the
state-averaged channel, computed with exact rationals (ties -> smallest m).
"""
from fractions import Fraction as F
from itertools import product
import pathlib
import sys

PS = [F(6, 10), F(4, 10)]
# P(y | x, s)
P = {(0, 0): [F(9, 10), F(1, 10)], (0, 1): [F(4, 10), F(6, 10)],
     (1, 0): [F(2, 10), F(8, 10)], (1, 1): [F(7, 10), F(3, 10)]}
N = 4


def marginal(y, x):
    return sum(PS[s] * P[(x, s)][y] for s in range(2))


def encode(m, past):
    m1, m0 = m >> 1, m & 1
    i = len(past)
    if i == 0:
        return m1
    if i == 1:
        return m0
    if i == 2:
        return m1 if past[0] != m1 else m0
    return m0 if past[1] != m0 else m1


def bfs_labels(m):
    labels = []
    for depth in range(N):
        for path in product(range(2), repeat=depth):
            labels.append(encode(m, list(path)))
    return labels


def likelihood(m, ys):
    p = F(1)
    for i, y in enumerate(ys):
        p *= marginal(y, encode(m, ys[:i]))
    return p


def main(out):
    decoder = []
    for ys in product(range(2), repeat=N):
        lik = [likelihood(m, list(ys)) for m in range(4)]
        decoder.append(max(range(4), key=lambda m: (lik[m], -m)))
    lines = ["# generated by tools/gen_bundled_code.py", "isac_code 1", f"n {N}", "rate 0.5",
             "alphabets 2 2", "family table"]
    for m in range(4):
        lines.append(f"encoder {m} " + " ".join(map(str, bfs_labels(m))))
    lines.append("decoder " + " ".join(map(str, decoder)))
    pathlib.Path(out).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/code_n4.code")
