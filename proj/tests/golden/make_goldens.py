#!/usr/bin/env python3
"""Reference term matrices as text dumps, transcribed by hand and kept
separate from the C++ tables. Couplings are all 2, so each g^2/2 prefactor is
one and the entries are the bare rational coefficients."""
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def dump(name, m):
    with open(os.path.join(HERE, name + ".txt"), "w") as f:
        f.write("# %s %d %d\n" % (name, len(m), len(m[0])))
        for row in m:
            f.write(" ".join("%.17g,%.17g" % (v.real, v.imag) for v in map(complex, row)) + "\n")


def zeros(n):
    return [[0.0] * n for _ in range(n)]


def diag(v):
    m = zeros(len(v))
    for i, x in enumerate(v):
        m[i][i] = x
    return m


h = 1 / math.sqrt(2)
dump("plaquette_half", [[0, -h, 0, h], [-h, 0, h, 0], [0, h, 0, -h], [h, 0, -h, 0]])

u = zeros(8)
for a, b, v in [(1, 0, 1), (1, 2, 1), (6, 5, -1), (6, 7, -1)]:
    u[a][b] = v
    u[b][a] = v
dump("plaquette_one", u)

half_bulk = [3 / 4, 3 / 4, 11 / 4, 11 / 4]
half_edge = [3 / 4, 0, 3 / 4, 2]
dump("local_half_bulk", diag(half_bulk))
dump("local_half_boundary", diag([a + b for a, b in zip(half_bulk, half_edge)]))
one_bulk = [0, 3 / 2, 4, 3 / 2, 3 / 2, 2, 3 / 2, 2]
one_edge = [0, 3 / 4, 2, 3 / 4, 3 / 4, 0, 3 / 4, 2]
dump("local_one_bulk", diag(one_bulk))
dump("local_one_boundary", diag([a + b for a, b in zip(one_bulk, one_edge)]))


def pair(d, projectors, flips=()):
    m = zeros(d * d)
    for coeff, labels in projectors:
        for lab in labels.split():
            i = int(lab[0]) * d + int(lab[1])
            m[i][i] += coeff
    for coeff, labels in flips:
        for lab in labels.split():
            p, q = lab.split(":")
            i = int(p[0]) * d + int(p[1])
            j = int(q[0]) * d + int(q[1])
            m[i][j] += coeff
            m[j][i] += coeff
    return m


dump("pair_half", pair(4, [(3 / 4, "01 10 03 30 12 21 23 32"), (2, "02 20 13 31")]))

one_flips = [(1, "11:34 13:36 41:64 43:66")]
dump("pair_one_original", pair(8, [
    (3 / 4, "01 03 21 23 10 12 40 42 65 67 35 37 54 56 74 76"),
    (2, "02 20 57 75"),
    (1, "11 13 41 43 34 36 64 66"),
], one_flips))
dump("pair_one_simplified", pair(8, [
    (-3 / 4, "00 22 55 77"),
    (5 / 4, "02 20 57 75"),
    (1 / 4, "11 34 13 36 41 64 43 66"),
], one_flips))
