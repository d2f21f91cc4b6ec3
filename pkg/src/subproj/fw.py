"""Away-step Frank-Wolfe and the adaptive variant for projections onto B(f)."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Chain, ProjectionResult, SubmodularFunction, minimal_face_certificate
from .divergence import get_map
from .linopt import edmonds_greedy, face_greedy
from .toolkit import RoundingError, infer_from_iterate, relax_check, round_rational

ALL_TOOLS = frozenset({"t1", "t2", "t3", "t5", "t6"})


@dataclass
class SolverOptions:
    eps: float = 1e-7
    max_iters: int = 200000
    mu: Optional[float] = None
    L: Optional[float] = None
    drop_threshold: float = 1e-12
    tools: frozenset = ALL_TOOLS

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.mu is not None and self.L is not None and not 0 < self.mu <= self.L:
            raise ValueError("need 0 < mu <= L")


class ActiveSet:
    """Vertices with positive convex weights representing the iterate."""

    def __init__(self, vertices, weights):
        self.vertices = [np.asarray(v, dtype=float) for v in vertices]
        self.weights = np.asarray(weights, dtype=float)
        self._index = {self._key(v): i for i, v in enumerate(self.vertices)}
        self._matrix = None

    @staticmethod
    def _key(v):
        return np.round(v, 12).tobytes()

    def find(self, v) -> Optional[int]:
        return self._index.get(self._key(v))

    def matrix(self) -> np.ndarray:
        """Vertices stacked as rows (cached until the vertex list changes)."""
        if self._matrix is None:
            self._matrix = np.array(self.vertices)
        return self._matrix

    def point(self) -> np.ndarray:
        return self.weights @ self.matrix()

    def fw_update(self, v, gamma):
        """Move mass gamma onto vertex v (gamma = 1 collapses to v)."""
        if gamma >= 1.0:
            self.vertices = [np.asarray(v, dtype=float)]
            self.weights = np.array([1.0])
            self._index = {self._key(v): 0}
            self._matrix = None
            return
        self.weights = self.weights * (1.0 - gamma)
        i = self.find(v)
        if i is None:
            self.vertices.append(np.asarray(v, dtype=float))
            self.weights = np.append(self.weights, gamma)
            self._index[self._key(v)] = len(self.vertices) - 1
            self._matrix = None
        else:
            self.weights[i] += gamma

    def away_update(self, idx, gamma):
        """Move mass gamma away from vertices[idx]."""
        self.weights = self.weights * (1.0 + gamma)
        self.weights[idx] -= gamma

    def drop_small(self, threshold):
        """Remove vertices with weight <= threshold and renormalize."""
        keep = self.weights > threshold
        dropped = int(len(self.vertices) - np.count_nonzero(keep))
        if dropped:
            self.vertices = [v for v, k in zip(self.vertices, keep) if k]
            self.weights = self.weights[keep]
            self._index = {self._key(v): i for i, v in enumerate(self.vertices)}
            self._matrix = None
        self.weights = self.weights / self.weights.sum()
        return dropped


def line_search(mp, y, x, d, gamma_max: float) -> float:
    """Step size minimizing D_phi(x + gamma*d, y) over [0, gamma_max].

    Closed form for the Euclidean map.  Otherwise: if the derivative at
    gamma_max is still nonpositive the optimum is at the boundary (this test
    avoids the precision trap of solving for a root that sits past the
    boundary); else bisect the monotone derivative to an interval of 1e-12.
    """
    mp = get_map(mp)
    if gamma_max <= 0:
        raise ValueError("gamma_max must be positive")
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if mp.kind == "euclid":
        denom = float(d @ d)
        if denom == 0.0:
            raise ValueError("zero direction")
        g = -float(d @ (x - y)) / denom
        if g <= 0:
            raise ValueError("non-descent direction")
        return min(g, gamma_max)
    gy = mp.grad(y)

    def deriv(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            gr = mp.grad(np.maximum(x + t * d, 0) if mp.kind in ("kl", "is") else x + t * d)
        val = float(d @ (gr - gy))
        return val if math.isfinite(val) else math.inf

    if deriv(0.0) >= 0:
        raise ValueError("non-descent direction")
    if deriv(gamma_max) <= 0:
        return gamma_max
    lo, hi = 0.0, gamma_max
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if deriv(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _result(mp, y, z, active, gap, iters, restarts, lo_calls, pool_calls, exact,
            t0, converged):
    mp = get_map(mp)
    gradient = mp.grad(z) - mp.grad(y)
    levels = minimal_face_certificate(gradient)
    return ProjectionResult(
        x=z, chain=levels.chain(), levels=levels, active=active, fw_gap=gap,
        iterations=iters, restarts=restarts, lo_calls=lo_calls,
        pool_calls=pool_calls, exact=exact, time_sec=time.perf_counter() - t0,
        converged=converged)


def afw_project(f: SubmodularFunction, mp, y, opts: Optional[SolverOptions] = None,
                trace: Optional[list] = None) -> ProjectionResult:
    """Standard away-step Frank-Wolfe for min_{x in B(f)} D_phi(x, y)."""
    t0 = time.perf_counter()
    opts = opts or SolverOptions()
    mp = get_map(mp)
    y = np.asarray(y, dtype=float)
    gy = mp.grad(y)
    z, _ = edmonds_greedy(f, gy, "max")
    active = ActiveSet([z], [1.0])
    lo_calls = 1
    gap = math.inf
    converged = False
    it = 0
    for it in range(opts.max_iters):
        g = mp.grad(z) - gy
        v, _ = edmonds_greedy(f, g, "min")
        lo_calls += 1
        gap = float(-g @ (v - z))
        if trace is not None:
            trace.append({"iter": it, "gap": gap, "step": "eval",
                          "active_size": len(active.vertices)})
        if gap <= opts.eps:
            converged = True
            break
        scores = active.matrix() @ g
        a_idx = int(np.argmax(scores))
        a = active.vertices[a_idx]
        gap_away = float(scores[a_idx] - g @ z)
        if gap_away <= gap:
            d, gamma_max = v - z, 1.0
            gamma = line_search(mp, y, z, d, gamma_max)
            active.fw_update(v, gamma)
        else:
            lam = active.weights[a_idx]
            d, gamma_max = z - a, lam / (1.0 - lam) if lam < 1.0 else math.inf
            gamma = line_search(mp, y, z, d, min(gamma_max, 1e12))
            active.away_update(a_idx, gamma)
        z = z + gamma * d
        if active.drop_small(opts.drop_threshold):
            z = active.point()
    return _result(mp, y, z, active, gap, it, 0, lo_calls, 0,
                   exact=False, t0=t0, converged=converged)


def coordinate_bounds(f: SubmodularFunction):
    """Certified bounds on vertex coordinates of B(f).

    Every greedy coordinate f(U + e) - f(U) lies between the smallest final
    marginal f(E) - f(E \\ e) and the largest singleton value f({e}).
    """
    if f.kind == "cardinality":
        marg = f.marginals()
        return float(marg[-1]), float(marg[0])
    E = set(range(f.n))
    fE = f.value(E)
    lo = min(fE - f.value(E - {e}) for e in E)
    hi = max(f.value({e}) for e in E)
    return float(lo), float(hi)


def _curvature(f, mp, opts):
    if opts.mu is not None and opts.L is not None:
        return opts.mu, opts.L
    lo, hi = coordinate_bounds(f)
    return get_map(mp).curvature_bounds(lo, hi)


def _merge_chain(sets: list, new: frozenset) -> bool:
    """Insert a set into a nested family; reject non-nesting candidates."""
    if new in sets:
        return False
    for S in sets:
        if not (S <= new or new <= S):
            return False
    sets.append(new)
    sets.sort(key=len)
    return True


def _on_face(f, z, sets, tol) -> bool:
    return all(abs(float(np.sum(z[sorted(S)])) - f.value(S)) <= tol for S in sets)


def a2fw_project(f: SubmodularFunction, mp, y, warm_chain: Optional[Chain] = None,
                 warm_active: Optional[ActiveSet] = None,
                 opts: Optional[SolverOptions] = None,
                 trace: Optional[list] = None) -> ProjectionResult:
    """Adaptive away-step FW: restricted LO, tight-set inference, early exits.

    Maintains a chain of known tight sets of the optimum.  Each iteration the
    LO is restricted to the induced face; gradient level gaps above the
    strong-Wolfe radius add new tight sets; on chain growth with the iterate
    off the new face the solver restarts from a face vertex (at most n
    times); a feasible chain-restricted solve (relax) or a successful
    rational rounding terminates exactly.
    """
    t0 = time.perf_counter()
    opts = opts or SolverOptions()
    tools = opts.tools
    mp = get_map(mp)
    y = np.asarray(y, dtype=float)
    gy = mp.grad(y)
    n = f.n
    mu, _L = _curvature(f, mp, opts) if ("t2" in tools or "t6" in tools) else (1.0, 1.0)
    L_h = _L
    scale = 1.0 + abs(f.value(range(n)))
    face_tol = 1e-9 * scale

    sets: list = []
    if warm_chain is not None:
        for S in warm_chain:
            _merge_chain(sets, frozenset(S))

    def current_chain() -> Optional[Chain]:
        return Chain(sets) if sets else None

    if warm_active is not None:
        active = ActiveSet(list(warm_active.vertices), list(warm_active.weights))
        z = active.point()
    else:
        z = face_greedy(f, gy, current_chain(), "max")
        active = ActiveSet([z], [1.0])
    lo_calls = 1
    pool_calls = 0
    restarts = 0
    chain_changed = True
    last_relax = -(10 ** 9)
    can_round = ("t6" in tools and mp.kind == "euclid" and f.integral
                 and bool(np.all(y == np.round(y))))
    gap = math.inf
    converged = False
    it = 0

    while it < opts.max_iters:
        g = mp.grad(z) - gy

        # relax: exact early exit when the chain solve is feasible
        if "t5" in tools and (chain_changed or it - last_relax >= 10):
            xt, feasible = relax_check(f, mp, y, Chain(sets) if sets else Chain([frozenset(range(n))]))
            pool_calls += max(len(sets), 1)
            last_relax = it
            if feasible:
                if trace is not None:
                    trace.append({"iter": it, "gap": 0.0, "step": "relax-exit",
                                  "active_size": len(active.vertices)})
                return _result(mp, y, xt, None, 0.0, it, restarts, lo_calls,
                               pool_calls, exact=True, t0=t0, converged=True)
        chain_changed = False

        v = face_greedy(f, g, current_chain(), "min")
        lo_calls += 1
        gap = float(-g @ (v - z))
        eps_bound = math.sqrt(2.0 * max(gap, 0.0) / mu)
        if gap <= opts.eps:
            # before settling for an approximate answer, try the exact exits
            # once more with the final gradient
            if "t2" in tools and gap > 0:
                for S in infer_from_iterate(g, eps_bound, L_h).chain:
                    _merge_chain(sets, S)
            if "t5" in tools:
                xt, feasible = relax_check(
                    f, mp, y, Chain(sets) if sets else Chain([frozenset(range(n))]))
                pool_calls += max(len(sets), 1)
                if feasible:
                    return _result(mp, y, xt, None, 0.0, it, restarts, lo_calls,
                                   pool_calls, exact=True, t0=t0, converged=True)
            if can_round and eps_bound < 1.0 / (2.0 * n * n):
                try:
                    rounded = round_rational(z, n, f, y)
                except RoundingError:
                    pass
                else:
                    return _result(mp, y, rounded.x, None, 0.0, it, restarts,
                                   lo_calls, pool_calls, exact=True, t0=t0,
                                   converged=True)
            converged = True
            break

        # infer new tight sets from the iterate's gradient levels
        if "t2" in tools:
            inferred = infer_from_iterate(g, eps_bound, L_h)
            for S in inferred.chain:
                if _merge_chain(sets, S):
                    chain_changed = True
        if chain_changed and not _on_face(f, z, sets, face_tol):
            if restarts < n:
                z = face_greedy(f, g, current_chain(), "min")
                lo_calls += 1
                active = ActiveSet([z], [1.0])
                restarts += 1
                if trace is not None:
                    trace.append({"iter": it, "gap": gap, "step": "restart",
                                  "active_size": 1})
                it += 1
                continue

        # rational rounding once the iterate is provably close enough
        if can_round and eps_bound < 1.0 / (2.0 * n * n):
            try:
                rounded = round_rational(z, n, f, y)
            except RoundingError:
                pass
            else:
                if trace is not None:
                    trace.append({"iter": it, "gap": 0.0, "step": "round-exit",
                                  "active_size": len(active.vertices)})
                return _result(mp, y, rounded.x, None, 0.0, it, restarts,
                               lo_calls, pool_calls, exact=True, t0=t0, converged=True)

        scores = active.matrix() @ g
        a_idx = int(np.argmax(scores))
        a = active.vertices[a_idx]
        gap_away = float(scores[a_idx] - g @ z)
        if gap_away <= gap:
            d, gamma_max = v - z, 1.0
            gamma = line_search(mp, y, z, d, gamma_max)
            active.fw_update(v, gamma)
            step = "fw"
        else:
            lam = active.weights[a_idx]
            d = z - a
            gamma_max = lam / (1.0 - lam) if lam < 1.0 else 1e12
            gamma = line_search(mp, y, z, d, gamma_max)
            active.away_update(a_idx, gamma)
            step = "away"
        z = z + gamma * d
        if active.drop_small(opts.drop_threshold):
            z = active.point()
            step = "drop"
        if trace is not None:
            trace.append({"iter": it, "gap": gap, "step": step,
                          "active_size": len(active.vertices)})
        it += 1

    return _result(mp, y, z, active, gap, it, restarts, lo_calls, pool_calls,
                   exact=False, t0=t0, converged=converged)
