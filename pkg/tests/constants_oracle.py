"""Direct evaluation of the construction constants with exact rationals."""
from fractions import Fraction
from math import ceil


def constants(t, k):
    n = ceil(Fraction((t - 1) ** 3 * (t - 2), 2))
    ell = ceil(Fraction(3 * k, 2)) + n * 3 * k
    lp = n * (4 * ell + 5 * k) + 2 * ell + 3 * k
    r0 = 15 * t ** 12 * k + 18 * t ** 9 * k
    return {"N": n, "L": ell, "Lp": lp, "R0": r0, "R": r0 + 2 * lp}
