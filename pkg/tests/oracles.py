"""Reference implementations used only by the tests.

These deliberately avoid the package's code paths: high-precision mpmath
arithmetic, explicit Python loops, and direct (non-separable) convolution.
"""

import math

import mpmath

mpmath.mp.dps = 50


def mp_log_sum_exp(v):
    return float(mpmath.log(mpmath.fsum(mpmath.exp(mpmath.mpf(float(x))) for x in v)))


def mp_softmax(v):
    e = [mpmath.exp(mpmath.mpf(float(x))) for x in v]
    z = mpmath.fsum(e)
    return [x / z for x in e]


def mp_entropy(p):
    return -mpmath.fsum(mpmath.mpf(x) * mpmath.log(x) for x in p if x > 0)


def mp_kl(p, q):
    return mpmath.fsum(
        mpmath.mpf(float(a)) * (mpmath.log(mpmath.mpf(float(a))) - mpmath.log(mpmath.mpf(float(b))))
        for a, b in zip(p, q) if a > 0)


def loop_mean(rows):
    m = len(rows)
    return [math.fsum(r[k] for r in rows) / m for k in range(len(rows[0]))]


def loop_entropy(p):
    return -math.fsum(x * math.log(x) for x in p if x > 0)


def loop_kl(p, q):
    return math.fsum(a * math.log(a / b) for a, b in zip(p, q) if a > 0)


def loop_lse(v):
    m = max(v)
    return m + math.log(math.fsum(math.exp(x - m) for x in v))


def loop_softmax(v):
    m = max(v)
    e = [math.exp(x - m) for x in v]
    z = math.fsum(e)
    return [x / z for x in e]


def scalar_score(member_logits, score_id, member=0):
    """Per-sample score from (M, K) nested lists, via loops only."""
    probs = [loop_softmax(v) for v in member_logits]
    if score_id == "msp":
        return -max(probs[member])
    if score_id == "entropy":
        return loop_entropy(probs[member])
    if score_id == "energy":
        return -loop_lse(member_logits[member])
    pbar = loop_mean(probs)
    if score_id == "ens-msp":
        return -max(pbar)
    if score_id == "ens-entropy":
        return loop_entropy(pbar)
    if score_id == "avg-entropy":
        return math.fsum(loop_entropy(p) for p in probs) / len(probs)
    if score_id == "mi":
        return math.fsum(loop_kl(p, pbar) for p in probs) / len(probs)
    if score_id == "avg-energy":
        return -math.fsum(loop_lse(v) for v in member_logits) / len(member_logits)
    raise KeyError(score_id)


def threshold_scan_fpr(id_scores, ood_scores, level=0.95):
    """Walk every candidate threshold in increasing order, counting by hand."""
    ids = sorted(float(u) for u in id_scores)
    n = len(ids)
    best = math.inf
    kept = 0  # ids strictly below the current candidate
    for pos, t in enumerate(ids):
        if pos > 0 and t == ids[pos - 1]:
            continue
        kept = pos
        if kept / n >= level:
            best = t
            break
    admitted = sum(1 for u in ood_scores if u < best)
    return best, admitted / len(ood_scores)


def lanczos3(x):
    if x == 0:
        return 1.0
    if abs(x) >= 3:
        return 0.0
    px = math.pi * x
    return 3.0 * math.sin(px) * math.sin(px / 3.0) / (px * px)


def direct_lanczos_resize(img, target):
    """2-D direct convolution with clamped edges, normalized per output pixel.

    img is a list of rows of [r, g, b]; only upscaling (target >= size).
    """
    h, w = len(img), len(img[0])
    out = [[[0.0] * 3 for _ in range(target)] for _ in range(target)]
    sy, sx = h / target, w / target
    for oy in range(target):
        cy = (oy + 0.5) * sy
        for ox in range(target):
            cx = (ox + 0.5) * sx
            acc = [0.0, 0.0, 0.0]
            wsum = 0.0
            for jy in range(math.floor(cy - 3), math.ceil(cy + 3) + 1):
                wy = lanczos3(jy + 0.5 - cy)
                if wy == 0.0:
                    continue
                yy = min(max(jy, 0), h - 1)
                for jx in range(math.floor(cx - 3), math.ceil(cx + 3) + 1):
                    wx = lanczos3(jx + 0.5 - cx)
                    if wx == 0.0:
                        continue
                    xx = min(max(jx, 0), w - 1)
                    wgt = wy * wx
                    wsum += wgt
                    for c in range(3):
                        acc[c] += wgt * img[yy][xx][c]
            for c in range(3):
                v = min(max(acc[c] / wsum, 0.0), 255.0)
                out[oy][ox][c] = math.floor(v + 0.5)
    return out


def loop_hist_counts(xs, ys, x_edges, y_edges):
    """Double loop over samples and bins; edge bins absorb out-of-range values."""
    nx, ny = len(x_edges) - 1, len(y_edges) - 1
    counts = [[0] * ny for _ in range(nx)]

    def which(v, edges):
        n = len(edges) - 1
        for i in range(n):
            if edges[i] <= v < edges[i + 1]:
                return i
        return 0 if v < edges[0] else n - 1

    for x, y in zip(xs, ys):
        counts[which(x, x_edges)][which(y, y_edges)] += 1
    return counts
