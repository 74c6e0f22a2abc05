"""Shared golden values and deterministic generators for the test suite."""

import cmath
import math

import numpy as np

from apportion import JordanSpec

W6 = cmath.exp(1j * math.pi / 3)     # e^(i pi/3)
W3 = cmath.exp(2j * math.pi / 3)     # e^(2 pi i/3)

#: the worked 5x5 nilpotent image: uniform with common modulus 1/sqrt(3)
GOLDEN_5X5_IMAGE = np.array(
    [
        [-1, 1, -W6, -W3, -W3],
        [W3, -W3, -W3, -W6, -W6],
        [W3, -W3, W6, -W6, -W6],
        [1, -1, -W3, 1, 1],
        [-1, 1, W3, -1, -1],
    ],
    dtype=complex,
) / (1 - W3)

#: its transform: ones on the diagonal, phase ladder below, closing corner entry
GOLDEN_5X5_M = np.eye(5, dtype=complex)
for _j in range(4):
    GOLDEN_5X5_M[_j + 1, _j] = cmath.exp(1j * _j * math.pi / 3)
GOLDEN_5X5_M[0, 4] = -W3

#: the worked 3x3 image for the size-2-block-plus-zero family at lam = 1
GOLDEN_3X3_J2_IMAGE = np.array(
    [[1, -1, W3], [W3, -W3, -1], [1, -1, 1 + W3]], dtype=complex
)


def compositions_min2(n):
    """All ordered block-size lists summing to n with every part >= 2."""
    if n == 0:
        yield ()
        return
    for part in range(2, n + 1):
        if n - part == 1:
            continue
        for rest in compositions_min2(n - part):
            yield (part,) + rest


def all_nilpotent_specs(max_order=8):
    """Every nilpotent spec with order <= max_order and all blocks >= 2."""
    specs = []
    for n in range(2, max_order + 1):
        for sizes in compositions_min2(n):
            specs.append(JordanSpec(tuple((0j, s) for s in sizes)))
    return specs


def random_half_rank_spec(rng, max_order=10, max_modulus=3.0):
    """A random spec with rank at most half its order, moduli <= max_modulus."""
    while True:
        n = int(rng.integers(2, max_order + 1))
        blocks = []
        rem = n
        while rem > 0:
            size = int(rng.integers(1, min(rem, 4) + 1))
            if rng.random() < 0.55:
                lam = 0j
            else:
                mod = rng.uniform(0.05, max_modulus)
                lam = mod * cmath.exp(2j * math.pi * rng.random())
            blocks.append((lam, size))
            rem -= size
        spec = JordanSpec(tuple(blocks))
        # the zero matrix only admits the constant 0; skip it
        if 2 * spec.rank <= spec.order and not spec.is_zero_matrix():
            return spec


def random_nonsingular(rng, n, cond_cap=50.0):
    """A random complex matrix re-drawn until comfortably well conditioned."""
    while True:
        P = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        if np.linalg.cond(P) <= cond_cap:
            return P
