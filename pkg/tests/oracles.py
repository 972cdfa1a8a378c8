"""Independent reference implementations used only to check the library.

Everything here is written as a direct, slow transcription of the defining
formulas (explicit per-box loops, np.polyfit, exhaustive enumeration) and
shares no code with the package under test.
"""

import itertools

import numpy as np


def rho_q_literal(x, y, q, scale, poly_order):
    """Reference detrended cross-correlation coefficient, one pair."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    m = n // scale
    abscissa = np.arange(1, scale + 1, dtype=float)
    f2xx, f2yy, f2xy = [], [], []
    for nu in range(2 * m):
        if nu < m:
            lo = nu * scale
        else:
            lo = n - (nu - m + 1) * scale
        xb = x[lo : lo + scale]
        yb = y[lo : lo + scale]
        prof_x = np.cumsum(xb)
        prof_y = np.cumsum(yb)
        det_x = prof_x - np.polyval(np.polyfit(abscissa, prof_x, poly_order), abscissa)
        det_y = prof_y - np.polyval(np.polyfit(abscissa, prof_y, poly_order), abscissa)
        rx = det_x - det_x.mean()
        ry = det_y - det_y.mean()
        f2xx.append(float(np.dot(rx, rx)))
        f2yy.append(float(np.dot(ry, ry)))
        f2xy.append(float(np.dot(rx, ry)))
    f_xx = np.mean([v ** (q / 2.0) for v in f2xx])
    f_yy = np.mean([v ** (q / 2.0) for v in f2yy])
    f_xy = np.mean([np.sign(v) * abs(v) ** (q / 2.0) for v in f2xy])
    return f_xy / np.sqrt(f_xx * f_yy)


def box_index_ranges(n, scale):
    """1-based inclusive (first, last) sample indices of each box."""
    m = n // scale
    ranges = [(nu * scale + 1, nu * scale + scale) for nu in range(m)]
    ranges += [
        (n - (k + 1) * scale + 1, n - k * scale) for k in range(m)
    ]
    return ranges


def prufer_tree_edges(sequence, n):
    """Decode a Pruefer sequence into the edge list of a labeled tree."""
    degree = [1] * n
    for v in sequence:
        degree[v] += 1
    edges = []
    seq = list(sequence)
    for v in seq:
        for leaf in range(n):
            if degree[leaf] == 1:
                edges.append((leaf, v))
                degree[leaf] -= 1
                degree[v] -= 1
                break
    last = [v for v in range(n) if degree[v] == 1]
    edges.append((last[0], last[1]))
    return edges


_TREE_CACHE: dict = {}


def _all_labeled_trees(n):
    # (n^(n-2), n-1, 2) edge array of every labeled tree, built once.
    if n not in _TREE_CACHE:
        trees = [
            prufer_tree_edges(seq, n)
            for seq in itertools.product(range(n), repeat=n - 2)
        ]
        _TREE_CACHE[n] = np.asarray(trees, dtype=np.int64)
    return _TREE_CACHE[n]


def brute_force_mst(dist):
    """Exhaustive minimum spanning tree: (weight, edge set) over all
    labeled trees; the weight is the sorted-sum of the winner's edges."""
    n = dist.shape[0]
    trees = _all_labeled_trees(n)
    weights = dist[trees[:, :, 0], trees[:, :, 1]]
    best = int(np.argmin(weights.sum(axis=1)))
    edges = {tuple(sorted(e)) for e in trees[best].tolist()}
    return float(np.sum(np.sort(weights[best]))), edges


def set_partitions(items):
    """All set partitions (restricted-growth enumeration)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        for i, block in enumerate(smaller):
            yield smaller[:i] + [[first] + block] + smaller[i + 1 :]
        yield [[first]] + smaller


def modularity_direct(weights, communities, resolution=1.0):
    """Newman modularity of a node->community map on a weighted matrix.

    ``weights`` is symmetric with zero diagonal; ``communities`` maps node
    index -> community id.
    """
    w = np.asarray(weights, dtype=float)
    two_m = w.sum()
    if two_m == 0:
        return 0.0
    strength = w.sum(axis=1)
    q = 0.0
    n = w.shape[0]
    for i in range(n):
        for j in range(n):
            if communities[i] == communities[j]:
                q += w[i, j] - resolution * strength[i] * strength[j] / two_m
    return q / two_m


def best_partition_exhaustive(weights, resolution=1.0):
    """Globally optimal modularity over every set partition of the nodes."""
    n = weights.shape[0]
    best_q, best_parts = -np.inf, None
    for parts in set_partitions(range(n)):
        comm = {}
        for cid, block in enumerate(parts):
            for node in block:
                comm[node] = cid
        q = modularity_direct(weights, comm, resolution)
        if q > best_q:
            best_q, best_parts = q, parts
    return best_q, best_parts


def all_pairs_hops(n, edges):
    """Hop-count matrix of a graph by Floyd-Warshall."""
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for i, j in edges:
        dist[i, j] = dist[j, i] = 1.0
    for k in range(n):
        dist = np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :])
    return dist
