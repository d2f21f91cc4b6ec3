"""Tight-set toolkit: inference, active-set reuse, relax-and-check, rounding."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import Chain, SubmodularFunction, ShiftedFunction, minimal_face_certificate
from .divergence import get_map, pool
from .linopt import edmonds_greedy


@dataclass(frozen=True)
class InferredChain:
    """Chain of inferred tight sets with the gap value that certified each."""

    chain: Chain
    witnesses: tuple  # (set, gap) pairs, aligned with chain.sets


def _infer_prefixes(gradient: np.ndarray, threshold: float) -> InferredChain:
    """Prefix sets of the gradient level partition at gaps above threshold."""
    part = minimal_face_certificate(gradient)
    sets, witnesses = [], []
    acc = frozenset()
    for j in range(part.k - 1):
        acc = acc | part.blocks[j]
        gap = part.levels[j + 1] - part.levels[j]
        if gap > threshold:
            sets.append(acc)
            witnesses.append((acc, gap))
    return InferredChain(Chain(sets), tuple(witnesses))


def infer_from_previous(x, y, ytilde=None, eps: float = None, L: float = 1.0,
                        mp="euclid") -> InferredChain:
    """T1: tight sets of the projection of any ytilde with ||ytilde - y|| <= eps.

    Works off the level partition of grad(x) - grad(y) (x - y for the
    Euclidean map): every prefix before a level gap exceeding 4*eps*L is
    guaranteed tight for the new projection.
    """
    if eps is None or eps <= 0:
        raise ValueError("eps must be positive")
    mp = get_map(mp)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if ytilde is not None:
        ytilde = np.asarray(ytilde, dtype=float)
        if float(np.linalg.norm(y - ytilde)) > eps * (1 + 1e-12):
            raise ValueError("||y - ytilde|| exceeds eps")
    gradient = mp.grad(x) - mp.grad(y)
    return _infer_prefixes(gradient, 4.0 * eps * L)


def infer_from_iterate(h_gradient, eps: float, L: float = 1.0) -> InferredChain:
    """T2: tight sets of x* from an iterate z with ||z - x*|| <= eps.

    h_gradient is the objective gradient at z; prefixes before level gaps
    exceeding 2*L*eps are tight for x*.  (Callers inside FW pass
    eps = sqrt(2 g_FW / mu) from the strong-Wolfe gap bound.)
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    gradient = np.asarray(h_gradient, dtype=float)
    return _infer_prefixes(gradient, 2.0 * L * eps)


def _facet_distance(vertices: np.ndarray, i: int) -> float:
    """Distance from vertex i to the affine hull of the remaining vertices."""
    others = np.delete(vertices, i, axis=0)
    base = others[0]
    d = vertices[i] - base
    if others.shape[0] == 1:
        return float(np.linalg.norm(d))
    A = (others[1:] - base).T
    coef, *_ = np.linalg.lstsq(A, d, rcond=None)
    return float(np.linalg.norm(d - A @ coef))


def reuse_decision(x, active, y, ytilde):
    """T3: decide whether the active set of x = proj(y) is reusable for ytilde.

    Returns ("reuse"|"unknown", delta_hat).  delta_hat is a certified lower
    bound on the distance from x to the boundary of conv(active), computed
    only when the active vertices are affinely independent (min over vertices
    of barycentric weight times the distance to the opposite facet); when
    they are not, or the bound is not met, the answer is "unknown".
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ytilde = np.asarray(ytilde, dtype=float)
    V = np.asarray([np.asarray(v, dtype=float) for v in active.vertices])
    lam = np.asarray(active.weights, dtype=float)
    recon = lam @ V
    if float(np.linalg.norm(recon - x)) > 1e-9 * (1.0 + float(np.linalg.norm(x))):
        raise ValueError("active set does not reconstruct x")
    k = V.shape[0]
    if k == 1:
        return "unknown", 0.0
    diffs = (V[1:] - V[0]).T
    if np.linalg.matrix_rank(diffs) < k - 1:
        return "unknown", 0.0
    delta = min(lam[i] * _facet_distance(V, i) for i in range(k))
    move = float(np.linalg.norm(ytilde - y))
    return ("reuse" if move <= delta else "unknown"), delta


def relax_check(f: SubmodularFunction, mp, y, chain: Chain, tol: Optional[float] = None):
    """T5: solve the chain-restricted projection blockwise and test feasibility.

    Returns (xtilde, feasible).  xtilde minimizes the divergence over the
    affine restriction {x : x(S_i) = f(S_i)}; when it lies in B(f) it is the
    exact projection.
    """
    mp = get_map(mp)
    y = mp.check_domain(np.asarray(y, dtype=float), "y")
    chain = chain.with_ground_set(f.n)
    x = np.empty(f.n)
    prev, prev_val = frozenset(), 0.0
    for S in chain:
        cur_val = f.value(S)
        B = sorted(S - prev)
        target = cur_val - prev_val
        cvec = np.full(len(B), target / len(B))
        gamma = pool(mp, y[B], cvec)
        x[B] = mp.grad_inverse(gamma + mp.grad(y[B]))
        prev, prev_val = S, cur_val
    return x, membership(f, x, tol=tol)


def membership(f: SubmodularFunction, x, tol: Optional[float] = None) -> bool:
    """Test x in B(f) = {x : x(S) <= f(S) for all S, x(E) = f(E)}."""
    x = np.asarray(x, dtype=float)
    fE = f.value(range(f.n))
    if tol is None:
        tol = 1e-9 * (1.0 + abs(fE))
    if abs(float(np.sum(x)) - fE) > tol:
        return False
    if f.kind == "cardinality":
        xs = np.sort(x)[::-1]
        prefix = np.cumsum(xs)
        g = np.asarray(f.g[1:])
        return bool(np.all(prefix <= g + tol))
    if f.n <= 22:
        return find_violated_set(f, x, tol) is None
    return _membership_mnp(f, x, tol)


def find_violated_set(f: SubmodularFunction, x, tol: Optional[float] = None):
    """Exhaustive search for a subset with x(S) > f(S); None if feasible."""
    x = np.asarray(x, dtype=float)
    if f.n > 22:
        raise ValueError("exhaustive membership limited to n <= 22")
    if tol is None:
        tol = 1e-9 * (1.0 + abs(f.value(range(f.n))))
    if f.kind == "cardinality":
        order = np.argsort(-x)
        total = 0.0
        for k in range(1, f.n + 1):
            total += x[order[k - 1]]
            if total > f.g[k] + tol:
                return frozenset(int(e) for e in order[:k])
        return None
    for m in range(1, 1 << f.n):
        S = [i for i in range(f.n) if m >> i & 1]
        if float(np.sum(x[S])) > f.value(S) + tol:
            return frozenset(S)
    return None


def _membership_mnp(f: SubmodularFunction, x, tol: float) -> bool:
    """SFM route for large non-cardinality f: min_T f(T) - x(T) >= 0?

    Computed through the min-norm point of B(f - x) found by our own
    away-step FW; the minimum value is the sum of the negative coordinates.
    """
    from .fw import SolverOptions, afw_project

    shifted = ShiftedFunction(f, x)
    opts = SolverOptions(eps=1e-10, max_iters=5000)
    res = afw_project(shifted, "euclid", np.zeros(f.n), opts)
    # minimizers are prefixes of the min-norm point sorted ascending; evaluate
    # those candidate sets exactly so solver error cannot flip the verdict
    order = np.argsort(res.x, kind="stable")
    min_val = 0.0
    x = np.asarray(x, dtype=float)
    for k in range(1, f.n + 1):
        S = [int(e) for e in order[:k]]
        min_val = min(min_val, f.value(S) - float(np.sum(x[S])))
    return min_val >= -max(tol, 1e-8)


@dataclass(frozen=True)
class RationalGrid:
    """Q = {k/l : l in [n], k integer}; distinct members are >= 1/n^2 apart."""

    n: int

    def nearest(self, r: float):
        """Nearest grid member to r, with its distance (O(n) scan)."""
        best_frac, best_dist = None, np.inf
        for ell in range(1, self.n + 1):
            t = round(ell * r)
            dist = abs(ell * r - t) / ell
            if dist < best_dist - 1e-18:
                cand = Fraction(int(t), ell)
                best_frac, best_dist = cand, dist
        return best_frac, best_dist


@dataclass(frozen=True)
class RoundingResult:
    x: np.ndarray
    fractions: tuple


class RoundingError(RuntimeError):
    pass


def round_rational(x, n: Optional[int] = None, f: Optional[SubmodularFunction] = None,
                   y=None, verify: bool = True) -> RoundingResult:
    """T6: snap each coordinate to its unique nearest element of Q = {k/l : l <= n}.

    Valid when f and y are integral and ||x - x*|| < 1/(2 n^2): the Euclidean
    projection then has coordinates on the grid and the nearest member is
    unique.  The snapped point is verified feasible and first-order optimal.
    """
    x = np.asarray(x, dtype=float)
    if n is None:
        n = len(x)
    grid = RationalGrid(n)
    half_spacing = 1.0 / (2.0 * n * n)
    fracs, vals = [], np.empty(len(x))
    for i, r in enumerate(x):
        q, dist = grid.nearest(float(r))
        if dist >= half_spacing:
            raise RoundingError(
                f"coordinate {i} = {r!r} is not within 1/(2n^2) of a unique grid point")
        fracs.append(q)
        vals[i] = float(q)
    if verify:
        if f is None or y is None:
            raise ValueError("verification requires f and y")
        y = np.asarray(y, dtype=float)
        scale = 1.0 + abs(f.value(range(f.n)))
        if not membership(f, vals):
            raise RoundingError("rounded point is infeasible")
        v, _ = edmonds_greedy(f, y - vals, sense="max")
        if float((y - vals) @ (v - vals)) > 1e-9 * scale:
            raise RoundingError("rounded point fails first-order optimality")
    return RoundingResult(vals, tuple(fracs))
