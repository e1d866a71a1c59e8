"""Bivariate analysis on the product of two filtrations.

Every vertex of the digraph owns one leaf interval in each of the twin
filtrations, hence one rectangle in the unit square; the set of those
rectangles (one per vertex, with mass = the product of the two leaf
masses, normalized to a probability measure by default) is the *grid*.
Functions on the digraph are functions on the grid's representative
points, and the products of the two univariate orthonormal systems,
restricted to those points, supply the analysis system.

The restriction is not automatically orthogonal — the grid occupies
only a sliver of the full product partition — so the module offers two
modes.  "exact" re-orthonormalizes the restricted products by modified
Gram-Schmidt in graded lexicographic order, dropping dependent rows
(the surviving index set is reported); every Parseval/projection
statement then holds to machine precision.  "idealized" keeps the raw
restricted products and reports their orthogonality defect instead.

Frequencies are pairs k = (k1, k2).  The dyadic shell of an index is
shell(k) = max over axes of ceil(log2(ki + 1)); the default partition
of unity is the crisp indicator split along shells (gap 0), and the
default differentiation multiplier is 2**(r * shell(k)).  Filtered
sums, mixed-difference variation (the four-term Hardy-Krause style
functional), best uniform approximation from shell spans, a discrete
K-functional, and the four-sequence smoothness profile complete the
toolbox.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .basis import TreeBasis
from .filtration import Filtration


# -- the grid ---------------------------------------------------------------


@dataclass
class GridPoint:
    vertex: int
    rect: tuple[Fraction, Fraction, Fraction, Fraction]  # x0, x1, y0, y1
    point: tuple[Fraction, Fraction]
    mass: Fraction


class GridSet:
    """One rectangle (and representative point) per vertex."""

    def __init__(self, points: list[GridPoint], normalized: bool,
                 raw_total: Fraction):
        self.points = points
        self.normalized = normalized
        self.raw_total = raw_total

    def __len__(self) -> int:
        return len(self.points)

    def masses(self) -> np.ndarray:
        return np.array([float(p.mass) for p in self.points])

    def total_mass(self) -> Fraction:
        return sum((p.mass for p in self.points), Fraction(0))


def build_grid(filt_es: Filtration, filt_os: Filtration,
               normalize: bool = True) -> GridSet:
    """Pair the leaf intervals of the twin filtrations vertex by vertex.

    The representative point of a rectangle is its center (lower-left
    corner plus half the cell size); the mass is the product of the two
    leaf masses, divided by the total when ``normalize`` is set so the
    grid carries a probability measure.
    """
    verts_es = set(filt_es.vertex_leaf)
    verts_os = set(filt_os.vertex_leaf)
    if verts_es != verts_os:
        raise ValueError("filtrations cover different vertex sets")
    points = []
    raw_total = Fraction(0)
    for v in sorted(verts_es):
        x0, x1 = filt_es.leaf_interval(v)
        y0, y1 = filt_os.leaf_interval(v)
        mass = (x1 - x0) * (y1 - y0)
        raw_total += mass
        points.append(GridPoint(
            vertex=v, rect=(x0, x1, y0, y1),
            point=(x0 + (x1 - x0) / 2, y0 + (y1 - y0) / 2),
            mass=mass))
    if normalize:
        for p in points:
            p.mass = p.mass / raw_total
    return GridSet(points, normalize, raw_total)


# -- frequencies --------------------------------------------------------------


def _axis_shell(k: int, base: int) -> int:
    j, cap = 0, 1
    while k + 1 > cap:
        cap *= base
        j += 1
    return j


def shell_index(k: tuple[int, int], base: int = 2) -> int:
    """Shell of an index pair: max over axes of ceil(log_base(ki + 1))."""
    if base == 2:
        return max(int(k[0]).bit_length(), int(k[1]).bit_length())
    if base < 2:
        raise ValueError("shell base must be at least 2")
    return max(_axis_shell(int(k[0]), base), _axis_shell(int(k[1]), base))


def graded_lex_key(k: tuple[int, int]) -> tuple[int, int]:
    return (k[0] + k[1], k[0])


@dataclass
class FrequencySet:
    """Nonvanishing tensor indices on a grid, graded-lex sorted."""
    omega: list[tuple[int, int]]
    n1: int
    n2: int
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        self.omega = sorted(self.omega, key=graded_lex_key)
        self.members = frozenset(self.omega)

    def __len__(self) -> int:
        return len(self.omega)

    def __contains__(self, k) -> bool:
        return tuple(k) in self.members

    def max_shell(self, base: int = 2) -> int:
        return max(shell_index(k, base) for k in self.omega)

    def enlarged(self) -> list[tuple[int, int]]:
        """Dilation by the sup-ball of radius 2, clipped to the quadrant.

        Contains every +-1 neighbor of the base set, so multipliers
        defined on it survive the index shifts of summation by parts.
        """
        out = set()
        for k1, k2 in self.omega:
            for a in range(max(0, k1 - 2), k1 + 3):
                for b in range(max(0, k2 - 2), k2 + 3):
                    out.add((a, b))
        return sorted(out, key=graded_lex_key)


def axis_value_matrix(basis: TreeBasis, filt: Filtration,
                      grid: GridSet, axis: int) -> list[list]:
    """Exact psi values at the grid points' axis coordinates.

    Row n, column i: the n-th univariate function at the coordinate of
    grid point i along the chosen axis (0 = first filtration).
    """
    cells = {leaf.id: j for j, leaf in enumerate(filt.leaves())}
    table = basis.value_table()
    cols = [cells[filt.vertex_leaf[p.vertex]] for p in grid.points]
    return [[table[n][c] for c in cols] for n in range(basis.size)]


def compute_omega(basis_es: TreeBasis, basis_os: TreeBasis,
                  grid: GridSet) -> FrequencySet:
    """Indices whose tensor product survives restriction to the grid.

    Exact arithmetic: a product is kept iff some grid point carries a
    nonzero value of both factors.
    """
    filt1 = basis_es.filtration
    filt2 = basis_os.filtration
    v1 = axis_value_matrix(basis_es, filt1, grid, 0)
    v2 = axis_value_matrix(basis_os, filt2, grid, 1)
    b1 = np.array([[x != 0 for x in row] for row in v1], dtype=int)
    b2 = np.array([[x != 0 for x in row] for row in v2], dtype=int)
    hits = b1 @ b2.T
    omega = [(int(k1), int(k2)) for k1, k2 in np.argwhere(hits > 0)]
    return FrequencySet(omega, basis_es.size, basis_os.size)


# -- orthonormalization --------------------------------------------------------


def gram_orthonormalize(rows: np.ndarray, masses: np.ndarray,
                        drop_tol: float = 1e-9
                        ) -> tuple[np.ndarray, list[int], list[int]]:
    """Modified Gram-Schmidt under a weighted inner product.

    Rows are processed in order; a row whose residual norm falls below
    drop_tol * max(1, own norm) is dropped as dependent.  Two projection
    passes keep the result orthonormal to machine precision.  Returns
    (orthonormal rows, kept row indices, dropped row indices).
    """
    kept: list[int] = []
    dropped: list[int] = []
    basis: list[np.ndarray] = []
    for i, row in enumerate(np.asarray(rows, dtype=float)):
        r = row.copy()
        own = math.sqrt(float((row * row * masses).sum()))
        for _ in range(2):
            if basis:
                E = np.vstack(basis)
                coef = E @ (r * masses)
                r = r - coef @ E
        norm = math.sqrt(float((r * r * masses).sum()))
        if norm <= drop_tol * max(1.0, own):
            dropped.append(i)
            continue
        kept.append(i)
        basis.append(r / norm)
    E = np.vstack(basis) if basis else np.zeros((0, rows.shape[1]))
    return E, kept, dropped


# -- partitions of unity --------------------------------------------------------


@dataclass
class PartitionOfUnity:
    """Finitely many nonnegative shell weights summing to 1 on the
    index set, with supports that overlap only within the gap m_star
    and reach no higher than shell j + m_star."""
    shells: list[dict[tuple[int, int], float]]
    m_star: int = 0
    base: int = 2

    def n_shells(self) -> int:
        return len(self.shells)

    def g(self, j: int) -> dict[tuple[int, int], float]:
        if 0 <= j < len(self.shells):
            return self.shells[j]
        return {}

    def head(self, n: int) -> dict[tuple[int, int], float]:
        """H_n = g_0 + ... + g_n."""
        out: dict[tuple[int, int], float] = {}
        for j in range(min(n, len(self.shells) - 1) + 1):
            for k, v in self.shells[j].items():
                out[k] = out.get(k, 0.0) + v
        return out

    def validate(self, freqs: FrequencySet) -> None:
        if self.shells and self.shells[0].get((0, 0), 0.0) != 1.0:
            raise ValueError("the first shell must fix the constant index")
        supports = [frozenset(k for k, v in g.items() if v > 0.0)
                    for g in self.shells]
        for j, supp in enumerate(supports):
            for k in supp:
                if not 0.0 <= self.shells[j][k] <= 1.0:
                    raise ValueError(f"shell {j} leaves [0, 1] at {k}")
                if shell_index(k, self.base) > j + self.m_star:
                    raise ValueError(
                        f"shell {j} reaches index {k} above its band")
            for j2 in range(j + self.m_star + 1, len(supports)):
                if supp & supports[j2]:
                    raise ValueError(
                        f"shells {j} and {j2} overlap beyond gap "
                        f"{self.m_star}")
        total: dict[tuple[int, int], float] = {}
        for g in self.shells:
            for k, v in g.items():
                total[k] = total.get(k, 0.0) + v
        for k in freqs.omega:
            if abs(total.get(k, 0.0) - 1.0) > 1e-12:
                raise ValueError(f"shells do not sum to 1 at {k}")


def default_partition(freqs: FrequencySet, base: int = 2
                      ) -> PartitionOfUnity:
    """Crisp split: shell j holds exactly the indices with shell j."""
    top = freqs.max_shell(base)
    shells: list[dict[tuple[int, int], float]] = [dict() for _ in
                                                  range(top + 1)]
    for k in freqs.omega:
        shells[shell_index(k, base)][k] = 1.0
    part = PartitionOfUnity(shells, m_star=0, base=base)
    part.validate(freqs)
    return part


def box_filter(n: int, base: int = 2) -> dict[tuple[int, int], float]:
    """Indicator of the full lower-left shell box {shell(k) <= n}.

    This is the canonical materialization of the head H_n as a filter
    sequence on the whole quadrant: its variation is exactly 4 for
    every n >= 0, and filtering with it equals filtering with the
    index-set-restricted head (the extra indices carry no
    coefficients).  n < 0 gives the empty filter.
    """
    if n < 0:
        return {}
    top = base ** n
    return {(a, b): 1.0 for a in range(top) for b in range(top)}


# -- multipliers -----------------------------------------------------------------


@dataclass
class MultiplierSequence:
    """A positive symbol on the dilated index set, of a given order."""
    values: dict[tuple[int, int], float]
    order: float

    def __getitem__(self, k) -> float:
        return self.values[tuple(k)]

    def restricted(self, g: dict[tuple[int, int], float]
                   ) -> dict[tuple[int, int], float]:
        return {k: self.values[k] for k, v in g.items() if v > 0.0}

    def inverse_restricted(self, g: dict[tuple[int, int], float]
                           ) -> dict[tuple[int, int], float]:
        return {k: 1.0 / self.values[k] for k, v in g.items() if v > 0.0}


def default_multiplier(freqs: FrequencySet, order: float = 1.0,
                       base: int = 2) -> MultiplierSequence:
    """The shellwise symbol base**(order * shell(k)) on the dilation."""
    values = {k: float(base) ** (order * shell_index(k, base))
              for k in freqs.enlarged()}
    for k, v in values.items():
        if v <= 0.0:
            raise ValueError(f"multiplier must be positive at {k}")
    return MultiplierSequence(values, order)


# -- mixed-difference variation ---------------------------------------------------


def variation_2d(h) -> float:
    """Four-term variation of a finitely supported bivariate sequence.

    sup |h|  +  sup over rows of the column-jump sum  +  sup over
    columns of the row-jump sum  +  the total mixed-difference mass.
    The sequence is zero outside its support, so drops at the far edges
    count.  The indicator of a full rectangle scores exactly 4.
    """
    arr = _to_padded_array(h)
    if arr.size == 0 or not np.any(arr):
        return 0.0
    sup = float(np.max(np.abs(arr)))
    d2 = np.abs(np.diff(arr, axis=1)).sum(axis=1)
    d1 = np.abs(np.diff(arr, axis=0)).sum(axis=0)
    mixed = np.abs(np.diff(np.diff(arr, axis=0), axis=1)).sum()
    return sup + float(d2.max()) + float(d1.max()) + float(mixed)


def _to_padded_array(h) -> np.ndarray:
    if isinstance(h, dict):
        if not h:
            return np.zeros((1, 1))
        k1max = max(k[0] for k in h)
        k2max = max(k[1] for k in h)
        arr = np.zeros((k1max + 2, k2max + 2))
        for (k1, k2), v in h.items():
            arr[k1, k2] = float(v)
        return arr
    arr = np.asarray(h, dtype=float)
    return np.pad(arr, ((0, 1), (0, 1)))


# -- the analysis engine ------------------------------------------------------------


class GridAnalysis:
    """Tensor system restricted to a grid, ready for expansion work.

    mode="exact" (default) re-orthonormalizes the restricted products
    and exposes a genuinely orthonormal discrete system (surviving
    indices in ``active``); mode="idealized" keeps the raw restricted
    products of the orthonormalized univariate functions and reports
    their orthogonality defect.
    """

    def __init__(self, grid: GridSet, basis_es: TreeBasis,
                 basis_os: TreeBasis, mode: str = "exact",
                 drop_tol: float = 1e-9, partition_base: int = 2):
        if mode not in ("exact", "idealized"):
            raise ValueError(f"unknown mode {mode!r}")
        self.grid = grid
        self.basis_es = basis_es
        self.basis_os = basis_os
        self.mode = mode
        self.base = partition_base
        self.nu = grid.masses()
        if abs(self.nu.sum() - 1.0) > 1e-9 and grid.normalized:
            raise AssertionError("normalized grid mass must be 1")

        v1 = axis_value_matrix(basis_es, basis_es.filtration, grid, 0)
        v2 = axis_value_matrix(basis_os, basis_os.filtration, grid, 1)
        s1 = [math.sqrt(float(basis_es.aleph(n))) for n in range(basis_es.size)]
        s2 = [math.sqrt(float(basis_os.aleph(n))) for n in range(basis_os.size)]
        self._v1 = np.array([[float(x) * s for x in row]
                             for row, s in zip(v1, s1)])
        self._v2 = np.array([[float(x) * s for x in row]
                             for row, s in zip(v2, s2)])
        b1 = np.array([[x != 0 for x in row] for row in v1], dtype=int)
        b2 = np.array([[x != 0 for x in row] for row in v2], dtype=int)
        hits = b1 @ b2.T
        omega = [(int(a), int(b)) for a, b in np.argwhere(hits > 0)]
        self.freqs = FrequencySet(omega, basis_es.size, basis_os.size)

        raw = np.array([self._v1[k1] * self._v2[k2]
                        for k1, k2 in self.freqs.omega])
        self._raw = raw
        if mode == "exact":
            E, kept, dropped = gram_orthonormalize(raw, self.nu, drop_tol)
            self.active = [self.freqs.omega[i] for i in kept]
            self.dropped = [self.freqs.omega[i] for i in dropped]
            self._rows = E
        else:
            self.active = list(self.freqs.omega)
            self.dropped = []
            self._rows = raw
        self._index = {k: i for i, k in enumerate(self.active)}
        self.partition = default_partition(self.freqs, self.base)

    # -- bookkeeping -----------------------------------------------------

    def __len__(self) -> int:
        return len(self.grid)

    def row(self, k) -> np.ndarray:
        return self._rows[self._index[tuple(k)]]

    def max_shell(self) -> int:
        return max(shell_index(k, self.base) for k in self.active)

    def orthogonality_defect(self) -> float:
        """Max deviation of the working system's Gram matrix from I."""
        G = (self._rows * self.nu) @ self._rows.T
        return float(np.max(np.abs(G - np.eye(len(G)))))

    # -- norms ------------------------------------------------------------

    def sup_norm(self, fvals: np.ndarray) -> float:
        return float(np.max(np.abs(fvals))) if len(fvals) else 0.0

    def l2_norm(self, fvals: np.ndarray) -> float:
        return math.sqrt(float((fvals * fvals * self.nu).sum()))

    # -- expansions ---------------------------------------------------------

    def analyze(self, fvals: np.ndarray) -> dict[tuple[int, int], float]:
        """Coefficients of a grid function against the working system."""
        fvals = np.asarray(fvals, dtype=float)
        if fvals.shape != (len(self.grid),):
            raise ValueError("need one value per grid point")
        coef = self._rows @ (fvals * self.nu)
        return {k: float(c) for k, c in zip(self.active, coef)}

    def synthesize(self, coeffs: dict[tuple[int, int], float]) -> np.ndarray:
        out = np.zeros(len(self.grid))
        for k, c in coeffs.items():
            if c:
                out += c * self._rows[self._index[tuple(k)]]
        return out

    def filtered_sum(self, h: dict[tuple[int, int], float],
                     fvals: np.ndarray) -> np.ndarray:
        """sum_k h(k) f_hat(k) (working function at k), over supp h."""
        coeffs = self.analyze(fvals)
        mix = {k: h[k] * coeffs[k] for k in coeffs if k in h and h[k]}
        return self.synthesize(mix)

    def rectangle_partial_sum(self, coeffs: dict, m: tuple[int, int]
                              ) -> np.ndarray:
        """Truncation to indices k <= m componentwise."""
        take = {k: c for k, c in coeffs.items()
                if k[0] <= m[0] and k[1] <= m[1]}
        return self.synthesize(take)

    # -- graded approximation ------------------------------------------------

    def sigma(self, fvals: np.ndarray, n: int) -> np.ndarray:
        """Filtered sum with the head H_n of the partition of unity."""
        return self.filtered_sum(self.partition.head(n), fvals)

    def tau(self, fvals: np.ndarray, j: int) -> np.ndarray:
        """Block j of the graded decomposition (sigma_j - sigma_{j-1})."""
        return self.filtered_sum(self.partition.g(j), fvals)

    def degree_span(self, n: int) -> list[tuple[int, int]]:
        """Active indices reached by the head H_n."""
        head = self.partition.head(n)
        return [k for k in self.active if head.get(k, 0.0) > 0.0]

    def best_uniform_approx(self, fvals: np.ndarray, n: int
                            ) -> tuple[float, np.ndarray]:
        """Sup-norm distance to the degree-n span, by linear program.

        Returns (distance, best approximant's grid values).
        """
        span = self.degree_span(n)
        if not span:
            return self.sup_norm(fvals), np.zeros(len(self.grid))
        A = np.vstack([self._rows[self._index[k]] for k in span]).T
        npts, ncols = A.shape
        A_ub = np.block([[A, -np.ones((npts, 1))],
                         [-A, -np.ones((npts, 1))]])
        fvals = np.asarray(fvals, dtype=float)
        b_ub = np.concatenate([fvals, -fvals])
        cost = np.zeros(ncols + 1)
        cost[-1] = 1.0
        bounds = [(None, None)] * ncols + [(0, None)]
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds,
                      method="highs")
        if not res.success:
            raise RuntimeError(f"minimax LP failed: {res.message}")
        return float(res.fun), A @ res.x[:ncols]

    # -- differentiation -------------------------------------------------------

    def derivative(self, fvals: np.ndarray, mu: MultiplierSequence
                   ) -> np.ndarray:
        """Coefficientwise action of a multiplier symbol."""
        coeffs = self.analyze(fvals)
        return self.synthesize({k: mu[k] * c for k, c in coeffs.items()})

    def k_functional(self, fvals: np.ndarray, delta: float,
                     mu: MultiplierSequence) -> float:
        """Best trade-off ||f - g|| + delta^r ||Dg|| over graded candidates.

        Candidates are g = 0 and the graded projections sigma_n; this is
        an upper bound for the true infimum and the standard computable
        surrogate.  Nondecreasing in delta by construction.
        """
        fvals = np.asarray(fvals, dtype=float)
        best = self.sup_norm(fvals)
        coeffs = self.analyze(fvals)
        r = mu.order
        for n in range(self.max_shell() + 1):
            head = self.partition.head(n)
            take = {k: coeffs[k] for k in coeffs if head.get(k, 0.0) > 0.0}
            g = self.synthesize({k: head[k] * c for k, c in take.items()})
            dg = self.synthesize({k: head[k] * mu[k] * c
                                  for k, c in take.items()})
            val = self.sup_norm(fvals - g) + delta ** r * self.sup_norm(dg)
            best = min(best, val)
        return best

    # -- smoothness --------------------------------------------------------------

    def smoothness_profile(self, fvals: np.ndarray, order: float = 1.0,
                           rho: float = math.inf) -> "SmoothnessReport":
        """Fit the decay exponent of the four graded error sequences."""
        fvals = np.asarray(fvals, dtype=float)
        mu = default_multiplier(self.freqs, order, self.base)
        top = self.max_shell()
        seqs: dict[str, list[float]] = {
            "degree_error": [], "projection_error": [],
            "block_norm": [], "k_functional": []}
        for n in range(top + 1):
            seqs["degree_error"].append(self.best_uniform_approx(fvals, n)[0])
            seqs["projection_error"].append(
                self.sup_norm(fvals - self.sigma(fvals, n)))
            seqs["block_norm"].append(self.sup_norm(self.tau(fvals, n)))
            seqs["k_functional"].append(
                self.k_functional(fvals, float(self.base) ** (-n), mu))
        gamma: dict[str, Optional[float]] = {}
        fit_points: dict[str, list[int]] = {}
        for name, ys in seqs.items():
            pts = [(j, y) for j, y in enumerate(ys) if y > 1e-13]
            fit_points[name] = [j for j, _ in pts]
            if len(pts) < 3:
                gamma[name] = None
                continue
            xs = np.array([j for j, _ in pts], dtype=float)
            ly = np.log([y for _, y in pts]) / math.log(self.base)
            slope = np.polyfit(xs, ly, 1)[0]
            gamma[name] = float(-slope)
        insufficient = any(v is None for v in gamma.values())
        return SmoothnessReport(gamma=gamma, sequences=seqs,
                                fit_points=fit_points, rho=rho,
                                order=order, insufficient=insufficient)


@dataclass
class SmoothnessReport:
    """Fitted decay exponents of the four graded sequences."""
    gamma: dict[str, Optional[float]]
    sequences: dict[str, list[float]]
    fit_points: dict[str, list[int]]
    rho: float
    order: float
    insufficient: bool

    def spread(self) -> Optional[float]:
        """Max minus min of the fitted exponents; None if any is missing."""
        vals = [v for v in self.gamma.values() if v is not None]
        if len(vals) < len(self.gamma):
            return None
        return max(vals) - min(vals)

    def to_json_dict(self) -> dict:
        spread = self.spread()
        return {
            "gamma": {k: (None if v is None else float(v))
                      for k, v in self.gamma.items()},
            "gamma_spread": None if spread is None else float(spread),
            "sequences": {k: [float(x) for x in v]
                          for k, v in self.sequences.items()},
            "fit_points": self.fit_points,
            "rho": ("inf" if math.isinf(self.rho) else float(self.rho)),
            "order": float(self.order),
            "insufficient_resolution": bool(self.insufficient),
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")
