"""Piecewise-constant orthogonal systems built from a filtration.

Conventions used throughout this module:

* Functions on [0, 1) are piecewise constant and right-continuous:
  a function is a list of breakpoints 0 = x_0 < ... < x_M = 1 and one
  value per cell [x_i, x_{i+1}).  All arithmetic is generic, so exact
  rational inputs stay exact end to end.

* Local system at a node.  A node of mass w with children of masses
  p_0..p_{m-1} splits its interval at the prefix sums P_k = p_0+..+p_{k-1}.
  The local functions are phi_0 = the node's indicator and, for
  1 <= k <= m-1,

      phi_k = p_k * 1_{[left of split k]} - P_k * 1_{[child k]},

  which are mutually orthogonal with squared norms w (k = 0) and
  p_k * P_k * P_{k+1} (k >= 1).  Because the functions are constant on
  the child cells, integrating against them equals the finite quadrature
  over the child left-endpoints weighted by child mass, and the kernel
  sum_k phi_k(x_i) phi_k(x_j) / ||phi_k||^2 collapses to delta_ij / p_j.
  (The k = 0 term contributes 1/w; for a unit-mass node that is the
  familiar leading 1.)  The auxiliary step functions

      aux_k = (w - P_k) * 1_{[left of split k]} - P_k * 1_{[rest of node]}

  are orthogonal to phi_0..phi_{k-1}, which is what makes the system
  triangular in the splits.

* Global system.  Index 0 is the constant function.  Every other index
  names a non-leftmost child u = [a', b') of some node v = [a, b) via
  the level-by-level enumeration, and the function is the local phi of
  that child built from *conditional* masses (child mass over parent
  mass):

      psi_n = (b'-a')/(b-a)  on [a, a'),
             -(a'-a)/(b-a)   on [a', b'),
              0              elsewhere,

  with 1/||psi_n||^2 given in closed form by
  (b-a)^2 / ((b'-a')(a'-a)(b'-a)).  The system is orthogonal, constant
  on leaf cells, and spans exactly the leaf-measurable functions.

Expansions, filtered sums with their variation bound, and best uniform
approximation from leading spans (a small linear program) live at the
bottom of the module.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .filtration import Filtration, LLOEnumeration, llo_enumerate


# -- piecewise-constant functions -------------------------------------------


class PiecewiseConstant:
    """Right-continuous step function on [0, 1)."""

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints: Sequence, values: Sequence,
                 validate: bool = True):
        self.breakpoints = list(breakpoints)
        self.values = list(values)
        if validate:
            if len(self.breakpoints) != len(self.values) + 1:
                raise ValueError("need one more breakpoint than values")
            if self.breakpoints[0] != 0 or self.breakpoints[-1] != 1:
                raise ValueError("domain must be exactly [0, 1)")
            for lo, hi in zip(self.breakpoints, self.breakpoints[1:]):
                if not lo < hi:
                    raise ValueError("breakpoints must strictly increase")

    # construction helpers

    @classmethod
    def constant(cls, value) -> "PiecewiseConstant":
        return cls([0, 1], [value], validate=False)

    @classmethod
    def indicator(cls, a, b) -> "PiecewiseConstant":
        """Indicator of [a, b) as a function on [0, 1)."""
        bps, vals = [0], []
        if a > 0:
            bps.append(a)
            vals.append(0)
        vals.append(1)
        if b < 1:
            bps.append(b)
            vals.append(0)
        bps.append(1)
        return cls(bps, vals)

    def __repr__(self) -> str:
        return f"PiecewiseConstant({len(self.values)} pieces)"

    def evaluate(self, x):
        if not 0 <= x < 1:
            raise ValueError(f"point {x} outside [0, 1)")
        return self.values[bisect_right(self.breakpoints, x) - 1]

    __call__ = evaluate

    def integral(self):
        total = 0
        for v, lo, hi in zip(self.values, self.breakpoints,
                             self.breakpoints[1:]):
            total += v * (hi - lo)
        return total

    def _merged(self, other: "PiecewiseConstant") -> list:
        cuts = sorted(set(self.breakpoints) | set(other.breakpoints))
        return cuts

    def inner(self, other: "PiecewiseConstant"):
        """Integral of the pointwise product over [0, 1)."""
        cuts = self._merged(other)
        total = 0
        i = j = 0
        for lo, hi in zip(cuts, cuts[1:]):
            while self.breakpoints[i + 1] <= lo:
                i += 1
            while other.breakpoints[j + 1] <= lo:
                j += 1
            total += self.values[i] * other.values[j] * (hi - lo)
        return total

    def _zip_with(self, other: "PiecewiseConstant", op) -> "PiecewiseConstant":
        cuts = self._merged(other)
        vals = []
        i = j = 0
        for lo in cuts[:-1]:
            while self.breakpoints[i + 1] <= lo:
                i += 1
            while other.breakpoints[j + 1] <= lo:
                j += 1
            vals.append(op(self.values[i], other.values[j]))
        return PiecewiseConstant(cuts, vals, validate=False)

    def __add__(self, other):
        return self._zip_with(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zip_with(other, lambda a, b: a - b)

    def product(self, other):
        return self._zip_with(other, lambda a, b: a * b)

    def scale(self, c) -> "PiecewiseConstant":
        return PiecewiseConstant(self.breakpoints,
                                 [c * v for v in self.values],
                                 validate=False)

    def sup_norm(self):
        return max(abs(v) for v in self.values)

    def to_float(self) -> "PiecewiseConstant":
        return PiecewiseConstant([float(x) for x in self.breakpoints],
                                 [float(v) for v in self.values],
                                 validate=False)

    def simplify(self) -> "PiecewiseConstant":
        """Merge adjacent pieces with exactly equal values."""
        bps, vals = [self.breakpoints[0]], []
        for v, hi in zip(self.values, self.breakpoints[1:]):
            if vals and v == vals[-1]:
                bps[-1] = hi
            else:
                vals.append(v)
                bps.append(hi)
        return PiecewiseConstant(bps, vals)

    def values_on(self, grid: Sequence) -> list:
        """Values per cell of a coarser-or-equal grid.

        Raises if this function is not constant on some grid cell, i.e.
        when its own breakpoints cut through the grid's cells.
        """
        out = []
        for lo, hi in zip(grid, grid[1:]):
            i = bisect_right(self.breakpoints, lo) - 1
            v = self.values[i]
            j = i + 1
            while j < len(self.values) and self.breakpoints[j] < hi:
                if self.values[j] != v:
                    raise ValueError(
                        "function is not constant on a grid cell "
                        f"[{lo}, {hi})")
                j += 1
            out.append(v)
        return out


# -- the local system at a single node ---------------------------------------


class LocalBasis:
    """Orthogonal step functions refining one node into its children.

    Parameters: the node's left endpoint ``a`` and the child masses
    ``weights`` (p_0..p_{m-1}); the node occupies [a, a + sum(weights)).
    Exact inputs (ints/Fractions) give exact functions.
    """

    def __init__(self, weights: Sequence, a=0):
        if len(weights) < 2:
            raise ValueError("a node needs at least two children")
        if any(w <= 0 for w in weights):
            raise ValueError("child masses must be positive")
        self.a = a
        self.weights = list(weights)
        self.m = len(weights)
        self.prefix = [weights[0] * 0]
        for w in weights:
            self.prefix.append(self.prefix[-1] + w)
        self.total = self.prefix[-1]
        if not (0 <= a and (a + self.total) <= 1):
            raise ValueError("node interval must sit inside [0, 1)")

    def nodes(self) -> list:
        """Quadrature nodes: left endpoint of every child."""
        return [self.a + P for P in self.prefix[:-1]]

    def child_interval(self, k: int) -> tuple:
        return (self.a + self.prefix[k], self.a + self.prefix[k + 1])

    def norm_sq(self, k: int):
        if k == 0:
            return self.total
        return self.weights[k] * self.prefix[k] * self.prefix[k + 1]

    def phi(self, k: int) -> PiecewiseConstant:
        if not 0 <= k < self.m:
            raise ValueError(f"index {k} outside 0..{self.m - 1}")
        if k == 0:
            return _support_function(self.a, self.a + self.total,
                                     [(self.a, self.a + self.total,
                                       1 + self.total * 0)])
        p_k = self.weights[k]
        P_k = self.prefix[k]
        left = self.a
        mid = self.a + P_k
        right = self.a + self.prefix[k + 1]
        return _support_function(left, right,
                                 [(left, mid, p_k), (mid, right, -P_k)])

    def phi_tilde(self, k: int) -> PiecewiseConstant:
        """Auxiliary splitter: orthogonal to phi_0..phi_{k-1}; zero at k=m."""
        if not 1 <= k <= self.m:
            raise ValueError(f"index {k} outside 1..{self.m}")
        if k == self.m:
            return PiecewiseConstant([0, 1], [0 * self.total])
        P_k = self.prefix[k]
        left, mid = self.a, self.a + P_k
        right = self.a + self.total
        return _support_function(left, right,
                                 [(left, mid, self.total - P_k),
                                  (mid, right, -P_k)])


def _support_function(lo, hi, pieces) -> PiecewiseConstant:
    """Assemble a function from (a, b, value) pieces, zero outside them."""
    zero = 0 * pieces[0][2]
    bps, vals = [0], []
    if lo > 0:
        bps.append(lo)
        vals.append(zero)
    for _, b, v in pieces:
        bps.append(b)
        vals.append(v)
    if hi < 1:
        bps.append(1)
        vals.append(zero)
    return PiecewiseConstant(bps, vals)


def local_basis(weights: Sequence, a=0) -> LocalBasis:
    """Convenience constructor for the local system at one node."""
    return LocalBasis(weights, a)


def verify_local_identities(basis: LocalBasis) -> dict:
    """Max violation of each structural identity of a local system.

    Returns a dict with keys "orthogonality" (pairwise integrals against
    the closed-form norms), "quadrature" (mass-weighted point sums equal
    integrals), "dual_kernel" (the inverse quadrature identity), and
    "aux_orthogonality" (auxiliary functions against earlier phis),
    plus "max".  Exact inputs make every entry exactly zero.
    """
    m = basis.m
    phis = [basis.phi(k) for k in range(m)]
    xs = basis.nodes()
    zero = basis.total * 0

    worst = {"orthogonality": zero, "quadrature": zero,
             "dual_kernel": zero, "aux_orthogonality": zero}

    for k in range(m):
        for ell in range(k, m):
            val = phis[k].inner(phis[ell])
            expect = basis.norm_sq(k) if k == ell else zero
            worst["orthogonality"] = max(worst["orthogonality"],
                                         abs(val - expect))
            quad = sum(p * phis[k](x) * phis[ell](x)
                       for p, x in zip(basis.weights, xs))
            worst["quadrature"] = max(worst["quadrature"], abs(quad - val))

    point_vals = [[phi(x) for x in xs] for phi in phis]
    for j in range(m):
        for ell in range(m):
            kern = sum(point_vals[k][j] * point_vals[k][ell]
                       / basis.norm_sq(k) for k in range(m))
            expect = 1 / basis.weights[j] if j == ell else zero
            worst["dual_kernel"] = max(worst["dual_kernel"],
                                       abs(kern - expect))

    for k in range(1, m + 1):
        aux = basis.phi_tilde(k)
        for i in range(k):
            worst["aux_orthogonality"] = max(worst["aux_orthogonality"],
                                             abs(phis[i].inner(aux)))

    worst["max"] = max(worst.values())
    return worst


# -- the global system --------------------------------------------------------


class TreeBasis:
    """The orthogonal system of a filtration, one function per leaf."""

    def __init__(self, filt: Filtration,
                 enum: Optional[LLOEnumeration] = None):
        self.filtration = filt
        self.enum = enum if enum is not None else llo_enumerate(filt)
        self._cache: dict[int, PiecewiseConstant] = {}
        self._leaf_bps: Optional[list] = None
        self._values: Optional[list[list]] = None

    @property
    def size(self) -> int:
        return len(self.enum)

    def node_of(self, n: int) -> int:
        return self.enum.order[n]

    def intervals_of(self, n: int):
        """((a, b), (a', b')): parent and own interval of index n >= 1."""
        node = self.filtration.node(self.enum.order[n])
        parent = self.filtration.node(node.parent)
        return (parent.a, parent.b), (node.a, node.b)

    def psi(self, n: int) -> PiecewiseConstant:
        if n in self._cache:
            return self._cache[n]
        if not 0 <= n < self.size:
            raise ValueError(f"index {n} outside 0..{self.size - 1}")
        if n == 0:
            fn = PiecewiseConstant([Fraction(0), Fraction(1)], [Fraction(1)])
        else:
            (a, b), (a2, b2) = self.intervals_of(n)
            up = (b2 - a2) / (b - a)
            down = (a2 - a) / (b - a)
            fn = _support_function(a, b2, [(a, a2, up), (a2, b2, -down)])
        self._cache[n] = fn
        return fn

    def aleph(self, n: int) -> Fraction:
        """Inverse squared norm of psi_n, in closed form."""
        if n == 0:
            return Fraction(1)
        (a, b), (a2, b2) = self.intervals_of(n)
        return (b - a) ** 2 / ((b2 - a2) * (a2 - a) * (b2 - a))

    def psi_orthonormal(self, n: int) -> PiecewiseConstant:
        return self.psi(n).to_float().scale(sqrt(float(self.aleph(n))))

    # -- evaluation on the leaf grid ------------------------------------

    def leaf_breakpoints(self) -> list:
        if self._leaf_bps is None:
            bps = [Fraction(0)]
            for leaf in self.filtration.leaves():
                bps.append(leaf.b)
            self._leaf_bps = bps
        return self._leaf_bps

    def value_table(self) -> list[list]:
        """values[n][cell]: psi_n on each leaf cell (exact)."""
        if self._values is None:
            grid = self.leaf_breakpoints()
            mids = [(lo + hi) / 2 for lo, hi in zip(grid, grid[1:])]
            self._values = [[self.psi(n)(x) for x in mids]
                            for n in range(self.size)]
        return self._values

    # -- expansions ------------------------------------------------------

    def analyze(self, f: PiecewiseConstant) -> list:
        """Coefficients of a leaf-measurable function, all indices."""
        grid = self.leaf_breakpoints()
        f.values_on(grid)  # rejects functions that cut inside a leaf cell
        return [self.aleph(n) * f.inner(self.psi(n))
                for n in range(self.size)]

    def synthesize(self, coeffs: Sequence) -> PiecewiseConstant:
        """Finite expansion sum_k coeffs[k] psi_k as a function."""
        if len(coeffs) > self.size:
            raise ValueError("more coefficients than basis functions")
        grid = self.leaf_breakpoints()
        table = self.value_table()
        vals = []
        for cell in range(len(grid) - 1):
            acc = 0
            for k, c in enumerate(coeffs):
                if c:
                    acc = acc + c * table[k][cell]
            vals.append(acc)
        return PiecewiseConstant(grid, vals, validate=False)

    def partial_sum(self, f: PiecewiseConstant, n: int) -> PiecewiseConstant:
        """Projection onto the span of indices 0..n (inclusive)."""
        coeffs = self.analyze(f)[:n + 1]
        return self.synthesize(coeffs)

    def filtered_sum(self, h: Sequence, f: PiecewiseConstant
                     ) -> PiecewiseConstant:
        """sum_k h[k] f_hat(k) psi_k over the finite support of h."""
        coeffs = self.analyze(f)
        filt = [h[k] * coeffs[k] if k < len(h) else 0 * coeffs[k]
                for k in range(self.size)]
        return self.synthesize(filt)

    def best_uniform_approx(self, f: PiecewiseConstant, n: int
                            ) -> tuple[float, PiecewiseConstant]:
        """Distance from f to the span of indices 0..n in the sup norm.

        Since every function involved is constant on leaf cells, this is
        a finite minimax problem, solved exactly as a linear program.
        Returns (distance, best approximant).
        """
        if not 0 <= n < self.size:
            raise ValueError(f"index {n} outside 0..{self.size - 1}")
        grid = self.leaf_breakpoints()
        fvals = np.array([float(v) for v in f.values_on(grid)])
        table = self.value_table()
        A = np.array([[float(table[k][cell]) for k in range(n + 1)]
                      for cell in range(len(grid) - 1)])
        ncells, ncols = A.shape
        # variables: coefficients c (free) then the bound t
        A_ub = np.block([[A, -np.ones((ncells, 1))],
                         [-A, -np.ones((ncells, 1))]])
        b_ub = np.concatenate([fvals, -fvals])
        cost = np.zeros(ncols + 1)
        cost[-1] = 1.0
        bounds = [(None, None)] * ncols + [(0, None)]
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds,
                      method="highs")
        if not res.success:
            raise RuntimeError(f"minimax LP failed: {res.message}")
        witness = self.synthesize(list(res.x[:ncols]))
        return float(res.fun), witness


def variation_1d(h: Sequence) -> float:
    """Sup plus total jump of a finitely supported filter sequence.

    The sequence is read as h[0..len-1] followed by zeros, so the final
    drop to zero counts as a jump.  The indicator of an initial segment
    scores exactly 2.
    """
    hs = [float(x) for x in h] + [0.0]
    if not hs:
        return 0.0
    sup = max(abs(x) for x in hs)
    jumps = sum(abs(b - a) for a, b in zip(hs, hs[1:]))
    return sup + jumps
