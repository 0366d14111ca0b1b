"""Exhaustive oracle: does ``s`` contain ``t`` vertices pairwise at distance >= sep?"""
import itertools

from strategies import all_pairs


def has_dispersed_tuple(g, s, t, sep):
    d = all_pairs(g)
    far = lambda a, b: d[a, b] < 0 or d[a, b] >= sep
    return any(all(far(a, b) for a, b in itertools.combinations(c, 2))
               for c in itertools.combinations(sorted(set(s)), t))
