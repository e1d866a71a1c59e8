"""Independent reference implementations for cross-checking.

Everything here computes the same quantities as the package by a
different route (different algorithm, different library call, or plain
brute force), so agreement is meaningful evidence and not tautology.
Only the tests import this module.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp


def minimax_distance(A: np.ndarray, f: np.ndarray) -> float:
    """Best sup-norm distance from f to the column span of A.

    Smoothed-minimax oracle: minimize T * logsumexp(+-residual / T)
    with BFGS while annealing the temperature T down to 1e-7.  The
    smoothing bias at the final temperature is T*log(2*npoints), which
    stays below 1e-6 for any problem of the size used in tests, and the
    returned value is always achievable (it evaluates a feasible point).
    """
    f = np.asarray(f, dtype=float)
    A = np.asarray(A, dtype=float)
    if A.size == 0 or A.shape[1] == 0:
        return float(np.max(np.abs(f))) if f.size else 0.0
    x = np.linalg.lstsq(A, f, rcond=None)[0]
    for T in (1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4,
              1e-4, 3e-5, 1e-5, 3e-6, 1e-6, 3e-7, 1e-7):
        def smoothed(c, T=T):
            r = A @ c - f
            z = np.concatenate([r, -r]) / T
            lse = logsumexp(z)
            w = np.exp(z - lse)
            grad = A.T @ (w[:len(r)] - w[len(r):])
            return T * lse, grad

        x = minimize(smoothed, x, jac=True, method="BFGS",
                     options={"maxiter": 400, "gtol": 1e-13}).x
    return float(np.max(np.abs(A @ x - f)))


def floyd_warshall(lengths: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths on a dense length matrix with inf."""
    D = np.array(lengths, dtype=float)
    n = D.shape[0]
    np.fill_diagonal(D, 0.0)
    for k in range(n):
        D = np.minimum(D, D[:, k, None] + D[None, k, :])
    return D


def components_union_find(n: int, edges) -> list[frozenset[int]]:
    """Undirected connected components via union-find."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        ra, rb = find(int(u)), find(int(v))
        if ra != rb:
            parent[ra] = rb
    groups: dict[int, set[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), set()).add(v)
    return [frozenset(g) for g in groups.values()]


def modularity_brute(W: np.ndarray, assign) -> float:
    """Double-loop evaluation of the directed modularity formula."""
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    m = W.sum()
    k_out = W.sum(axis=1)
    k_in = W.sum(axis=0)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if assign[i] == assign[j]:
                total += W[i, j] - k_out[i] * k_in[j] / m
    return total / m


def f_measure_brute(pred, truth, n: int) -> float:
    total = 0.0
    for C in pred:
        best = 0.0
        for L in truth:
            overlap = len(set(C) & set(L))
            best = max(best, 2.0 * overlap / (len(C) + len(L)))
        total += len(C) * best
    return total / n


def confusion_brute(pred, truth) -> np.ndarray:
    ncls = len(truth)
    M = np.zeros((ncls, ncls))
    for C in pred:
        best_j, best_overlap = 0, -1
        for j, L in enumerate(truth):
            overlap = len(set(C) & set(L))
            if overlap > best_overlap:
                best_j, best_overlap = j, overlap
        for k, L in enumerate(truth):
            M[best_j, k] += len(set(C) & set(L)) / len(L)
    return M


def variation_2d_brute(h: dict) -> float:
    """Literal four-term variation with explicit loops."""
    if not h or not any(h.values()):
        return 0.0

    def val(k1, k2):
        return float(h.get((k1, k2), 0.0))

    k1max = max(k[0] for k in h)
    k2max = max(k[1] for k in h)
    sup = max(abs(val(a, b))
              for a in range(k1max + 2) for b in range(k2max + 2))
    col = max(sum(abs(val(a, b + 1) - val(a, b))
                  for b in range(k2max + 2))
              for a in range(k1max + 2))
    row = max(sum(abs(val(a + 1, b) - val(a, b))
                  for a in range(k1max + 2))
              for b in range(k2max + 2))
    mixed = sum(abs(val(a + 1, b + 1) - val(a + 1, b)
                    - val(a, b + 1) + val(a, b))
                for a in range(k1max + 2) for b in range(k2max + 2))
    return sup + col + row + mixed


def exhaustive_two_medoid(dist: np.ndarray) -> float:
    """Optimal 2-center objective by trying every center pair."""
    n = dist.shape[0]
    best = np.inf
    for a, b in itertools.combinations(range(n), 2):
        obj = np.minimum(dist[a], dist[b]).sum()
        best = min(best, obj)
    return float(best)


def random_walk_embedding(W: np.ndarray, n_eig: int, t: float = 1.0
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Diffusion coordinates via the nonsymmetric random-walk matrix.

    Returns (eigenvalues, coordinates); an independent route to the
    package's symmetric-matrix embedding (same subspace, same
    eigenvalues).
    """
    W = np.asarray(W, dtype=float)
    deg = W.sum(axis=1)
    P = W / deg[:, None]
    lam, vecs = np.linalg.eig(P)
    order = np.argsort(lam.real)[::-1]
    lam = lam[order].real[:n_eig]
    vecs = vecs[:, order].real[:, :n_eig]
    return lam, vecs * np.sign(lam)[None, :] * np.abs(lam)[None, :] ** t


def label_propagation(W: np.ndarray, labeled: dict[int, int],
                      n_classes: int, iters: int = 300) -> np.ndarray:
    """Clamped label spreading on the row-normalized adjacency."""
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    P = W / W.sum(axis=1)[:, None]
    F = np.zeros((n, n_classes))
    for v, c in labeled.items():
        F[int(v), int(c)] = 1.0
    clamp = F.copy()
    mask = F.sum(axis=1) > 0
    for _ in range(iters):
        F = P @ F
        F[mask] = clamp[mask]
    return np.argmax(F, axis=1)


def weighted_lstsq_fit(rows: np.ndarray, masses: np.ndarray,
                       f: np.ndarray) -> np.ndarray:
    """L2(nu)-best representation of f in the span of the given rows.

    Returns the fitted values (not the coefficients), computed by a
    dense weighted least-squares solve.
    """
    sq = np.sqrt(np.asarray(masses, dtype=float))
    A = (np.asarray(rows, dtype=float) * sq[None, :]).T
    c = np.linalg.lstsq(A, np.asarray(f, dtype=float) * sq, rcond=None)[0]
    return np.asarray(rows, dtype=float).T @ c


def coarse_grain_brute(W: np.ndarray, parts) -> np.ndarray:
    """Double-loop cluster-graph weights."""
    k = len(parts)
    out = np.zeros((k, k))
    for i, Pi in enumerate(parts):
        for j, Pj in enumerate(parts):
            out[i, j] = sum(W[u, v] for u in Pi for v in Pj)
    return out
