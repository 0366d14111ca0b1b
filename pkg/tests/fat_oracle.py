"""Independent all-pairs oracle for the distance part of the fatness check."""
import numpy as np

from strategies import all_pairs


def distance_violations(g, model, k):
    """Set of (member, member, distance) for non-incident pairs closer than ``k``."""
    d = all_pairs(g)
    p = model.pattern.n
    members = [sorted(set(s.tolist())) for s in model.branch_sets]
    members += [sorted(set(q)) for q in model.branch_paths]
    names = [f"U{i}" for i in range(p)] + [f"E{e}" for e in range(len(model.branch_paths))]
    incident = set()
    for e, (x, y) in enumerate(model.pattern.edges):
        incident |= {(x, p + e), (y, p + e)}
    out = set()
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            if (i, j) in incident or not members[i] or not members[j]:
                continue
            sub = d[np.ix_(members[i], members[j])]
            sub = sub[sub >= 0]
            if sub.size and sub.min() < k:
                out.add((names[i], names[j], int(sub.min())))
    return out
