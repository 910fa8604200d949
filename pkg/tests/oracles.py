"""Unvectorized reference implementations used as test oracles.

Everything here is deliberately written with plain Python loops and scalar
arithmetic, independent of the library's vectorized code paths. Random draws
(pair sampling, base ratios) are inputs to the pipeline rather than computed
values, so the oracles consume an equally-seeded RngState through the same
documented draw sequence to receive identical stochastic inputs.
"""

import math

import numpy as np

from sentmix.rng import RngState, sample_beta

LN_EPS = 1e-5
MINMAX_EPS = 1e-8
DEGENERATE = 1e-12


def ref_matmul(a, b):
    n, k = len(a), len(a[0])
    m = len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return np.array(out)


def ref_softmax_rows(m):
    out = []
    for row in np.asarray(m):
        hi = max(row)
        exps = [math.exp(x - hi) for x in row]
        total = sum(exps)
        out.append([e / total for e in exps])
    return np.array(out)


def ref_layer_norm(m, gain, bias):
    out = []
    for row in np.asarray(m):
        mu = sum(row) / len(row)
        var = sum((x - mu) ** 2 for x in row) / len(row)
        inv = 1.0 / math.sqrt(var + LN_EPS)
        out.append([(x - mu) * inv * g + b for x, g, b in zip(row, gain, bias)])
    return np.array(out)


def ref_l2_normalize_rows(m):
    out = []
    for row in np.asarray(m):
        norm = math.sqrt(sum(x * x for x in row))
        if norm > 0.0:
            out.append([x / norm for x in row])
        else:
            out.append([0.0] * len(row))
    return np.array(out)


def ref_similarity(feature_mats):
    """Mean cosine similarity over modalities; returns (matrix, mean_offdiag)."""
    mats = [ref_l2_normalize_rows(m) for m in feature_mats]
    b = mats[0].shape[0]
    s = [[0.0] * b for _ in range(b)]
    for zn in mats:
        for i in range(b):
            for j in range(b):
                s[i][j] += sum(zn[i][t] * zn[j][t] for t in range(zn.shape[1]))
    s = np.array(s) / len(mats)
    off = [s[i][j] for i in range(b) for j in range(b) if i != j]
    return s, sum(off) / len(off)


def ref_eligible(s, threshold):
    b = s.shape[0]
    return [(i, j) for i in range(b) for j in range(i + 1, b) if s[i][j] > threshold]


def ref_select(s, threshold, target, rng: RngState):
    """Replays the documented draw sequence on the oracle's own eligible list."""
    candidates = ref_eligible(s, threshold)
    n = len(candidates)
    if n == 0:
        return []
    if n >= target:
        order = list(range(n))
        for k in range(target):
            j = k + rng.randint_below(n - k)
            order[k], order[j] = order[j], order[k]
        return [candidates[i] for i in order[:target]]
    return [candidates[rng.randint_below(n)] for _ in range(target)]


def ref_intensity(params, z):
    """Scalar-loop multi-head attention intensity predictor."""
    z = np.asarray(z)
    b, d = z.shape
    h, dk = params.heads, params.key_dim
    scale = 1.0 / math.sqrt(dk)
    concat = [[0.0] * (h * dk) for _ in range(b)]
    for head in range(h):
        q = ref_matmul(z, params.w_q[head])
        k = ref_matmul(z, params.w_k[head])
        v = ref_matmul(z, params.w_v[head])
        scores = [[sum(q[r][t] * k[c][t] for t in range(dk)) * scale for c in range(b)]
                  for r in range(b)]
        attn = ref_softmax_rows(scores)
        for r in range(b):
            for t in range(dk):
                concat[r][head * dk + t] = sum(attn[r][c] * v[c][t] for c in range(b))
    proj = ref_matmul(concat, params.w_o)
    resid = [[proj[r][c] + z[r][c] for c in range(d)] for r in range(b)]
    normed = ref_layer_norm(resid, params.ln_gain, params.ln_bias)
    return np.array([math.tanh(sum(row) / d) for row in normed])


def ref_minmax_weights(intensities, epsilon=MINMAX_EPS):
    lo = min(intensities)
    hi = max(intensities)
    if hi - lo < DEGENERATE:
        return [0.0] * len(intensities)
    return [(abs(x) - lo) / (hi - lo + epsilon) for x in intensities]


def ref_pair_ratio(w_i, w_j, base):
    total = w_i + w_j
    share = 0.5 if total < DEGENERATE else w_i / total
    return 0.5 * (share + base)


def ref_augment(feature_mats, labels, params_by_modality, select_rng: RngState,
                lambda_rng: RngState, alpha, threshold, target):
    """Full selection + intensity + ratio + mixing step, all scalar loops.

    Returns a dict of every intermediate so each stage can be compared.
    """
    order = ("text", "video", "audio")
    s, mean_off = ref_similarity([feature_mats[m] for m in order])
    pairs = ref_select(s, threshold, target, select_rng)
    out = {"similarity": s, "mean_offdiag": mean_off, "pairs": pairs}
    if not pairs:
        return out

    base = [sample_beta(lambda_rng, alpha) for _ in pairs]
    out["lambda_base"] = base

    intensities = {}
    weights = {}
    lam = {}
    for m in order:
        i_m = ref_intensity(params_by_modality[m], feature_mats[m])
        w_raw = ref_minmax_weights(i_m)
        w_cl = [min(x, 1.0) for x in w_raw]
        intensities[m] = i_m
        weights[m] = w_cl
        lam[m] = [ref_pair_ratio(w_cl[i], w_cl[j], b) for (i, j), b in zip(pairs, base)]
    out["intensities"] = intensities
    out["weights"] = weights
    out["lam"] = lam
    out["lam_label"] = [
        (lam["text"][p] + lam["video"][p] + lam["audio"][p]) / 3.0 for p in range(len(pairs))
    ]

    mixed = {}
    for m in order:
        z = np.asarray(feature_mats[m])
        rows = []
        for p, (i, j) in enumerate(pairs):
            l = lam[m][p]
            rows.append([l * z[i][c] + (1.0 - l) * z[j][c] for c in range(z.shape[1])])
        mixed[m] = np.array(rows)
    out["mixed_features"] = mixed
    out["mixed_labels"] = [
        out["lam_label"][p] * labels[i] + (1.0 - out["lam_label"][p]) * labels[j]
        for p, (i, j) in enumerate(pairs)
    ]
    return out
