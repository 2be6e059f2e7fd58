"""Independent reference implementations used as test oracles.

Everything here is written against the same contracts as the library but
along a different computational route (pure-Python recursion, explicit
double loops, exhaustive scans, direct normal-equation solves), so
agreement is meaningful.  Nothing in src/ imports this module.
"""

from __future__ import annotations

import math

import numpy as np

DEGENERATE_CHORD = 1e-12


def perp_distance_pythagoras(p, a, b) -> float:
    """Point-to-line distance via d^2 = |p-a|^2 - ((p-a).u)^2."""
    p, a, b = (list(map(float, v)) for v in (p, a, b))
    chord_sq = sum((bb - aa) ** 2 for aa, bb in zip(a, b))
    diff_sq = sum((pp - aa) ** 2 for aa, pp in zip(a, p))
    chord_len = math.sqrt(chord_sq)
    if chord_len < DEGENERATE_CHORD:
        return math.sqrt(diff_sq)
    comp = sum((pp - aa) * (bb - aa) for aa, bb, pp in zip(a, b, p)) / chord_len
    return math.sqrt(max(diff_sq - comp * comp, 0.0))


def perp_distance_rejection(p, a, b) -> float:
    """Point-to-line distance via the rejection vector, coded by hand."""
    p = np.asarray(p, float)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    chord = b - a
    norm = math.sqrt(float(chord @ chord))
    if norm < DEGENERATE_CHORD:
        return float(np.linalg.norm(p - a))
    u = chord / norm
    rej = (p - a) - ((p - a) @ u) * u
    return float(np.linalg.norm(rej))


def rdp_reference(points, epsilon: float) -> list[int]:
    """Direct transcription of the classic recursive simplification.

    Scans interior points left to right with a strict `>` against the
    running maximum, splits when the maximum deviation strictly exceeds
    epsilon, and concatenates the two halves dropping the duplicated
    split point.  Returns kept original indices.
    """
    points = [list(map(float, row)) for row in points]

    def recurse(idx: list[int]) -> list[int]:
        d_max = 0.0
        index = 0
        a = points[idx[0]]
        b = points[idx[-1]]
        for i in range(1, len(idx) - 1):
            d = perp_distance_pythagoras(points[idx[i]], a, b)
            if d > d_max:
                index = i
                d_max = d
        if d_max > epsilon:
            res1 = recurse(idx[: index + 1])
            res2 = recurse(idx[index:])
            return res1[:-1] + res2
        return [idx[0], idx[-1]]

    return recurse(list(range(len(points))))


def epsilon_candidates(points) -> list[float]:
    """All point-to-chord distances over triples j < i < k, plus 0.

    A superset of every deviation the recursion can realize, hence of
    every jump point of the retained-count step function.
    """
    n = len(points)
    cands = {0.0}
    for j in range(n):
        for k in range(j + 2, n):
            for i in range(j + 1, k):
                cands.add(perp_distance_pythagoras(points[i], points[j], points[k]))
    return sorted(cands)


def minimal_feasible_epsilon(points, t: int, count_fn) -> float:
    """Minimum feasible threshold over the finite candidate set.

    The retained count is a right-continuous step function whose jumps
    all lie on candidate values, so it is constant on each plateau
    [c_i, c_{i+1}).  Counts are evaluated at plateau midpoints: the
    candidates here and the distances inside the implementation may
    differ in the last ulp, which would make evaluation exactly at a
    candidate unreliable.  Returns the lower endpoint of the first
    feasible plateau.
    """
    cands = epsilon_candidates(points)
    probes = [0.5 * (a + b) for a, b in zip(cands, cands[1:])] + [cands[-1] + 1.0]
    for c, probe in zip(cands, probes):
        if count_fn(points, probe) <= t:
            return c
    raise AssertionError("no feasible candidate; the global chord deviation should always work")


def project_reference(hidden, attn):
    """Attention-weighted projection as an explicit double loop."""
    L, T, D = hidden.shape
    K = attn.shape[1]
    out = np.zeros((L, D))
    for l in range(L):
        for t in range(T):
            w = 0.0
            for k in range(K):
                w += attn[l, k, t]
            w /= K
            for d in range(D):
                out[l, d] += w * hidden[l, t, d]
    return out


def mean_reference(stack):
    """Per-coordinate naive averaging."""
    S = len(stack)
    out = np.zeros_like(stack[0])
    for s in range(S):
        out = out + stack[s]
    return out / S


def omega_reference(pivot_sets: dict, targets, n_layers: int) -> np.ndarray:
    """Recompute layer scores from pivot sets by independent summation."""
    scores = np.zeros(n_layers)
    for l in range(n_layers):
        acc = 0.0
        for t in sorted(targets):
            if l in pivot_sets[t]:
                acc += 1.0 / math.sqrt(t)
        scores[l] = acc
    return scores


def otsu_reference(signal, bins: int) -> float:
    """Exhaustive between-class-variance scan over all interior bin edges.

    Loops over data points (not histogram counts) with each value
    represented by its bin index, the same discrete Otsu objective along
    a different computational route.
    """
    signal = np.asarray(signal, float)
    lo, hi = float(signal.min()), float(signal.max())
    norm = (signal - lo) / (hi - lo)
    idx = np.minimum((norm * bins).astype(int), bins - 1)
    best_k, best_var = 1, -1.0
    for k in range(1, bins):
        low = [i for i in idx if i < k]
        high = [i for i in idx if i >= k]
        if not low or not high:
            continue
        w0 = len(low) / len(idx)
        w1 = len(high) / len(idx)
        mu0 = sum(low) / len(low)
        mu1 = sum(high) / len(high)
        var = w0 * w1 * (mu1 - mu0) ** 2
        if var > best_var:
            best_var = var
            best_k = k
    return lo + (best_k / bins) * (hi - lo)


def savgol_center_kernel(window: int, polyorder: int) -> np.ndarray:
    """Interior smoothing kernel from a direct normal-equations solve."""
    half = window // 2
    x = np.arange(-half, half + 1, dtype=float)
    A = np.vander(x, polyorder + 1, increasing=True)
    # coefficients of the center value as a linear map of the window:
    # e0^T (A^T A)^{-1} A^T
    return np.linalg.solve(A.T @ A, A.T)[0]


def importance_reference(omega, vel, beta):
    """One-liner recomputation of the mixed importance index."""
    def norm(v):
        v = np.asarray(v, float)
        spread = v.max() - v.min()
        return np.zeros_like(v) if spread <= 0 else (v - v.min()) / spread

    return beta * norm(omega) + (1 - beta) * norm(vel)
