"""Uniformly separable mirror maps, Bregman divergences, and the pool operation."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

POOL_TOL = 1e-12
_MAX_BRACKET = 200


class DomainError(ValueError):
    """Input outside a mirror map's domain (names the offending coordinate)."""


class MirrorMap:
    """A uniformly separable mirror map phi(x) = sum_e phi_e(x_e).

    Provides phi, its gradient, the gradient inverse, domain checks, and
    curvature bounds on a coordinate box (used for mu/L estimates).
    """

    kind: str = "abstract"

    def check_domain(self, x, name: str = "x", boundary_ok: bool = False):
        raise NotImplementedError

    def phi(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def grad_inverse(self, v) -> np.ndarray:
        raise NotImplementedError

    def curvature_bounds(self, lo: float, hi: float):
        """(mu, L) bounds of phi'' on the coordinate interval [lo, hi]."""
        raise NotImplementedError


class EuclideanMap(MirrorMap):
    kind = "euclid"

    def check_domain(self, x, name="x", boundary_ok=False):
        x = np.asarray(x, dtype=float)
        bad = np.flatnonzero(~np.isfinite(x))
        if bad.size:
            raise DomainError(f"{name}[{bad[0]}] is not finite")
        return x

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ x)

    def grad(self, x):
        return np.asarray(x, dtype=float).copy()

    def grad_inverse(self, v):
        return np.asarray(v, dtype=float).copy()

    def curvature_bounds(self, lo, hi):
        return 1.0, 1.0


class EntropyMap(MirrorMap):
    """phi(x) = sum x log x - x, generating the KL divergence."""

    kind = "kl"

    def check_domain(self, x, name="x", boundary_ok=False):
        x = np.asarray(x, dtype=float)
        bad = np.flatnonzero(~np.isfinite(x) | ((x < 0) if boundary_ok else (x <= 0)))
        if bad.size:
            raise DomainError(f"{name}[{bad[0]}] = {x[bad[0]]} not in the positive domain")
        return x

    def phi(self, x):
        x = self.check_domain(x, boundary_ok=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
        return float(np.sum(t - x))

    def grad(self, x):
        x = self.check_domain(x)
        return np.log(x)

    def grad_inverse(self, v):
        return np.exp(np.asarray(v, dtype=float))

    def curvature_bounds(self, lo, hi):
        if lo <= 0:
            raise DomainError("entropy curvature needs lo > 0")
        return 1.0 / hi, 1.0 / lo


class ItakuraSaitoMap(MirrorMap):
    """phi(x) = -sum log x (Burg entropy), generating the IS divergence."""

    kind = "is"

    def check_domain(self, x, name="x", boundary_ok=False):
        x = np.asarray(x, dtype=float)
        bad = np.flatnonzero(~np.isfinite(x) | (x <= 0))
        if bad.size:
            raise DomainError(f"{name}[{bad[0]}] = {x[bad[0]]} not strictly positive")
        return x

    def phi(self, x):
        x = self.check_domain(x)
        return -float(np.sum(np.log(x)))

    def grad(self, x):
        x = self.check_domain(x)
        return -1.0 / x

    def grad_inverse(self, v):
        v = np.asarray(v, dtype=float)
        bad = np.flatnonzero(v >= 0)
        if bad.size:
            raise DomainError(f"v[{bad[0]}] = {v[bad[0]]} outside range of the gradient (must be < 0)")
        return -1.0 / v

    def curvature_bounds(self, lo, hi):
        if lo <= 0:
            raise DomainError("IS curvature needs lo > 0")
        return 1.0 / hi**2, 1.0 / lo**2


class LogisticMap(MirrorMap):
    """phi(x) = sum x log x + (1-x) log(1-x) on (0,1)^n."""

    kind = "logistic"

    def check_domain(self, x, name="x", boundary_ok=False):
        x = np.asarray(x, dtype=float)
        if boundary_ok:
            bad = np.flatnonzero(~np.isfinite(x) | (x < 0) | (x > 1))
        else:
            bad = np.flatnonzero(~np.isfinite(x) | (x <= 0) | (x >= 1))
        if bad.size:
            raise DomainError(f"{name}[{bad[0]}] = {x[bad[0]]} not in (0, 1)")
        return x

    def phi(self, x):
        x = self.check_domain(x, boundary_ok=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
            b = np.where(x < 1, (1 - x) * np.log(np.where(x < 1, 1 - x, 1.0)), 0.0)
        return float(np.sum(a + b))

    def grad(self, x):
        x = self.check_domain(x)
        return np.log(x / (1.0 - x))

    def grad_inverse(self, v):
        v = np.asarray(v, dtype=float)
        bad = np.flatnonzero(~np.isfinite(v))
        if bad.size:
            raise DomainError(f"v[{bad[0]}] must be finite for the logistic map")
        return 1.0 / (1.0 + np.exp(-v))

    def curvature_bounds(self, lo, hi):
        if lo <= 0 or hi >= 1:
            raise DomainError("logistic curvature needs [lo, hi] inside (0, 1)")
        second = lambda t: 1.0 / (t * (1.0 - t))
        mu = 4.0 if lo <= 0.5 <= hi else min(second(lo), second(hi))
        return mu, max(second(lo), second(hi))


_MAPS = {
    "euclid": EuclideanMap(),
    "kl": EntropyMap(),
    "is": ItakuraSaitoMap(),
    "logistic": LogisticMap(),
}


def get_map(name) -> MirrorMap:
    if isinstance(name, MirrorMap):
        return name
    try:
        return _MAPS[name]
    except KeyError:
        raise ValueError(f"unknown mirror map {name!r}; choose from {sorted(_MAPS)}") from None


def bregman(mp: MirrorMap, x, y) -> float:
    """D_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>.

    Note: for the squared-Euclidean map this is (1/2)||x - y||^2; some
    references list the unhalved sum of squares, which is argmin-equivalent.
    """
    mp = get_map(mp)
    x = mp.check_domain(np.asarray(x, dtype=float), "x", boundary_ok=True)
    y = mp.check_domain(np.asarray(y, dtype=float), "y")
    return mp.phi(x) - mp.phi(y) - float(mp.grad(y) @ (x - y))


def grad_inverse(mp: MirrorMap, v) -> np.ndarray:
    return get_map(mp).grad_inverse(v)


def _bisect_pool(mp: MirrorMap, gy: np.ndarray, target: float, gamma_hi: Optional[float]):
    """Solve sum_i grad_inverse(gamma + gy_i) = target by bracketed bisection.

    The pooled sum is strictly increasing in gamma; the bracket expands
    geometrically from gamma = 0 (clamped below any domain ceiling).
    """

    def F(g):
        return float(np.sum(mp.grad_inverse(g + gy))) - target

    if gamma_hi is None:
        lo = hi = 0.0
        flo = fhi = F(0.0)
        step = 1.0
        for _ in range(_MAX_BRACKET):
            if flo > 0:
                lo -= step
                flo = F(lo)
            elif fhi < 0:
                hi += step
                fhi = F(hi)
            else:
                break
            step *= 2.0
        else:
            raise DomainError("pool: failed to bracket a root")
    else:
        # ceiling: gamma + max(gy) must stay below the range boundary
        hi = gamma_hi
        gap = 1.0
        lo = hi - gap
        flo = F(lo)
        for _ in range(_MAX_BRACKET):
            if flo <= 0:
                break
            gap *= 2.0
            lo = hi - gap
            flo = F(lo)
        else:
            raise DomainError("pool: failed to bracket a root")
        gap = (hi - lo) / 2.0
        hi = lo + gap
        fhi = F(hi)
        for _ in range(_MAX_BRACKET):
            if fhi >= 0:
                break
            gap = (gamma_hi - hi) / 2.0
            hi = gamma_hi - gap
            fhi = F(hi)
        else:
            raise DomainError("pool: failed to bracket a root")
    tol = POOL_TOL * (1.0 + abs(target))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = F(mid)
        if abs(fm) <= tol:
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pool(mp: MirrorMap, y, c, S: Optional[Sequence[int]] = None) -> float:
    """Solve sum_{i in S} grad_inverse(gamma + grad(y_i)) = sum_{i in S} c_i.

    Closed form for the Euclidean map (an average) and for KL (a log ratio);
    monotone bracketed bisection otherwise.
    """
    mp = get_map(mp)
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    if S is not None:
        idx = sorted(S)
        if not idx:
            raise ValueError("pool requires a nonempty subset")
        y = y[idx]
        c = c[idx]
    if y.size == 0:
        raise ValueError("pool requires a nonempty subset")
    mp.check_domain(y, "y")
    target = float(np.sum(c))
    if mp.kind == "euclid":
        return float(np.sum(c - y)) / y.size
    if mp.kind == "kl":
        sy = float(np.sum(y))
        if target <= 0:
            raise DomainError(f"pool: KL requires a positive target, got {target}")
        return math.log(target / sy)
    gy = mp.grad(y)
    if mp.kind == "is":
        if target <= 0:
            raise DomainError(f"pool: IS requires a positive target, got {target}")
        return _bisect_pool(mp, gy, target, gamma_hi=float(np.min(-gy)))
    if mp.kind == "logistic":
        if not 0 < target < y.size:
            raise DomainError(f"pool: logistic target must lie in (0, |S|), got {target}")
    return _bisect_pool(mp, gy, target, gamma_hi=None)
