"""Independent brute-force oracles: plain-Python loops, no shared code with the package."""

import math


def brute_calinski_harabasz(vectors, labels):
    n = len(vectors)
    clusters = sorted(set(labels))
    k = len(clusters)
    d = len(vectors[0])
    grand = [sum(v[j] for v in vectors) / n for j in range(d)]
    ss_w = 0.0
    ss_b = 0.0
    for c in clusters:
        members = [v for v, l in zip(vectors, labels) if l == c]
        center = [sum(v[j] for v in members) / len(members) for j in range(d)]
        for v in members:
            ss_w += sum((v[j] - center[j]) ** 2 for j in range(d))
        ss_b += len(members) * sum((center[j] - grand[j]) ** 2 for j in range(d))
    return (ss_b / ss_w) * ((n - k) / (k - 1))


def _dist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def brute_davies_bouldin(vectors, labels):
    clusters = sorted(set(labels))
    centers = {}
    dispersion = {}
    for c in clusters:
        members = [v for v, l in zip(vectors, labels) if l == c]
        d = len(members[0])
        centers[c] = [sum(v[j] for v in members) / len(members) for j in range(d)]
        dispersion[c] = sum(_dist(v, centers[c]) for v in members) / len(members)
    total = 0.0
    for c in clusters:
        worst = max(
            (dispersion[c] + dispersion[o]) / _dist(centers[c], centers[o])
            for o in clusters if o != c
        )
        total += worst
    return total / len(clusters)


def brute_silhouette(vectors, labels):
    """Widths (b-a)/max(a,b); own-cluster mean excludes the sample; cluster-then-global mean."""
    clusters = sorted(set(labels))
    per_cluster = {c: [] for c in clusters}
    for i, (v, l) in enumerate(zip(vectors, labels)):
        own = [j for j, lab in enumerate(labels) if lab == l and j != i]
        if not own:
            per_cluster[l].append(0.0)
            continue
        a = sum(_dist(v, vectors[j]) for j in own) / len(own)
        b = min(
            sum(_dist(v, vectors[j]) for j, lab in enumerate(labels) if lab == o)
            / sum(1 for lab in labels if lab == o)
            for o in clusters if o != l
        )
        per_cluster[l].append((b - a) / max(a, b))
    return sum(sum(ws) / len(ws) for ws in per_cluster.values()) / len(clusters)


def brute_ranks(values):
    """Average ranks, 1-based, ties share the mean of their rank range."""
    n = len(values)
    ranks = [0.0] * n
    for i, v in enumerate(values):
        less = sum(1 for w in values if w < v)
        equal = sum(1 for w in values if w == v)
        ranks[i] = less + (equal + 1) / 2.0
    return ranks


def brute_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(sum((a - mx) ** 2 for a in x) * sum((b - my) ** 2 for b in y))
    return num / den


def brute_spearman(x, y):
    return brute_pearson(brute_ranks(x), brute_ranks(y))
