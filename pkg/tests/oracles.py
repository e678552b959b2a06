"""Independent brute-force oracles: deliberately dumb loops, no shortcuts
shared with the implementation."""

import numpy as np

DIST_EPS = 1e-8


def dist(u, v):
    d = np.asarray(u) - np.asarray(v)
    return float(np.sqrt((d * d).sum() + DIST_EPS))


def brute_hard_triplet_loss(a, b, margin):
    n = len(a)
    terms = []
    for i in range(n):
        d_pos = dist(a[i], b[i])
        d_neg = np.inf
        for j in range(n):
            if j == i:
                continue
            d_neg = min(d_neg, dist(a[i], b[j]), dist(a[j], b[i]))
        terms.append(max(0.0, margin + d_pos - d_neg))
    return sum(terms) / n, terms


def brute_generalized_loss(e, labels, margin):
    uniq = []
    for l in labels:
        if l not in uniq:
            uniq.append(l)
    total = 0.0
    terms = []
    for l in uniq:
        members = [i for i, li in enumerate(labels) if li == l]
        others = [i for i, li in enumerate(labels) if li != l]
        d_pos = 0.0
        for i in members:
            for j in members:
                if i != j:
                    d_pos = max(d_pos, dist(e[i], e[j]))
        d_neg = np.inf
        for i in members:
            for j in others:
                d_neg = min(d_neg, dist(e[i], e[j]))
        term = max(0.0, margin + d_pos - d_neg)
        terms.append(term)
        total += term
    return total, terms


def brute_hardness(a, b):
    n = len(a)
    out = []
    for i in range(n):
        d_neg = np.inf
        for j in range(n):
            if j == i:
                continue
            d_neg = min(d_neg, dist(a[i], b[j]), dist(a[j], b[i]))
        out.append(dist(a[i], b[i]) - d_neg)
    return out


def brute_fpr95(scores, labels):
    """Threshold scan: smallest prefix (score >= t, ties together) with
    recall >= 0.95."""
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    best = None
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, l in zip(scores, labels) if s >= t and l)
        fp = sum(1 for s, l in zip(scores, labels) if s >= t and not l)
        if tp / n_pos >= 0.95:
            best = fp / n_neg
            break
    if best is None:
        best = n_neg / n_neg
    return best


def brute_ap(scores, labels):
    """Literal sum of precision times recall-step over descending scores,
    equal scores kept in original index order."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    n_pos = sum(labels)
    ap = 0.0
    hits = 0
    for rank, i in enumerate(order, start=1):
        if labels[i]:
            hits += 1
            ap += (hits / rank) * (1.0 / n_pos)
    return ap


def brute_maa(errors, max_deg, step_deg):
    t = step_deg
    accs = []
    while t <= max_deg + 1e-12:
        accs.append(sum(1 for e in errors if e <= t) / len(errors))
        t += step_deg
    return sum(accs) / len(accs)


def brute_nms(resp, side, threshold):
    """Per-pixel window scan with strict-max / lexicographic tie rule."""
    h, w = resp.shape
    half = side // 2
    peaks = []
    for y in range(h):
        for x in range(w):
            v = resp[y, x]
            if v < threshold:
                continue
            win = resp[max(y - half, 0):y + half + 1, max(x - half, 0):x + half + 1]
            if v < win.max():
                continue
            ty, tx = np.nonzero(win == v)
            y0, x0 = max(y - half, 0), max(x - half, 0)
            if min(zip((ty + y0).tolist(), (tx + x0).tolist())) == (y, x):
                peaks.append((y, x))
    return peaks


def dense_gaussian_blur(img, kernel1d):
    """Direct 2-D convolution with the separable kernel's outer product,
    symmetric (edge-duplicating) padding."""
    k2d = np.outer(kernel1d, kernel1d)
    half = len(kernel1d) // 2
    padded = np.pad(img, half, mode="symmetric")
    h, w = img.shape
    out = np.empty_like(img, dtype=float)
    for y in range(h):
        for x in range(w):
            out[y, x] = (padded[y:y + 2 * half + 1, x:x + 2 * half + 1] * k2d).sum()
    return out


def jacobi_eigh(a, sweeps=100, tol=1e-14):
    """Cyclic Jacobi eigensolver for small symmetric matrices."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(sum(a[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = 0.5 * np.arctan2(2 * a[p, q], a[q, q] - a[p, p])
                c, s = np.cos(theta), np.sin(theta)
                j = np.eye(n)
                j[p, p] = c
                j[q, q] = c
                j[p, q] = s
                j[q, p] = -s
                a = j.T @ a @ j
                v = v @ j
    vals = np.diag(a).copy()
    return vals, v
