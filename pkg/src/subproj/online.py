"""Online mirror descent with pluggable projectors, and follow-the-perturbed-leader."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import SubmodularFunction
from .divergence import get_map
from .fw import ActiveSet, SolverOptions, a2fw_project, afw_project
from .geometry import substream
from .linopt import edmonds_greedy
from .pav import pav_project
from .toolkit import infer_from_previous, membership, reuse_decision


@dataclass(frozen=True)
class LossStream:
    n: int
    T: int
    a: int
    b: int
    seed: int
    costs: np.ndarray        # T x n, rows nonnegative with unit l1 norm
    references: tuple        # the a reference permutations


def generate_losses(n: int, T: int, a: int = 1, b: int = 0, seed: int = 0) -> LossStream:
    """Click-through-rate style losses: sorted uniforms, l1-normalized.

    Each round draws v ~ U[0,1]^n, picks one of a reference permutations
    (each b random adjacent swaps away from a base permutation), sorts v to
    be consistent with it, and normalizes to unit l1 norm.
    """
    if a < 1 or b < 0 or T < 1:
        raise ValueError("need a >= 1, b >= 0, T >= 1")
    rng = substream(seed, "losses")
    base = rng.permutation(n)
    refs = []
    for _ in range(a):
        sigma = base.copy()
        for _ in range(b):
            j = int(rng.integers(n - 1))
            sigma[j], sigma[j + 1] = sigma[j + 1], sigma[j]
        refs.append(tuple(int(v) for v in sigma))
    costs = np.empty((T, n))
    for t in range(T):
        v = np.sort(rng.uniform(0.0, 1.0, n))[::-1]
        sigma = refs[int(rng.integers(a))]
        c = np.empty(n)
        c[list(sigma)] = v
        costs[t] = c / np.sum(c)
    return LossStream(n, T, a, b, seed, costs, tuple(refs))


@dataclass
class RunTrace:
    losses: np.ndarray       # per-round incurred loss
    cum_regret: np.ndarray   # regret curve against the exact comparator
    proj_iters: np.ndarray   # projector inner iterations per round
    proj_time: np.ndarray    # projector wall time per round (reported only)
    comparator_loss: float

    @property
    def regret(self) -> float:
        return float(self.cum_regret[-1])

    @property
    def total_iters(self) -> int:
        return int(np.sum(self.proj_iters))


def _diameter(f: SubmodularFunction, seed: int = 0) -> float:
    """Euclidean diameter of B(f); exact for cardinality-based f."""
    if f.kind == "cardinality":
        m = np.sort(f.marginals())
        return float(np.linalg.norm(m - m[::-1]))
    rng = substream(seed, "diameter")
    verts = [edmonds_greedy(f, rng.normal(0, 1, f.n))[0] for _ in range(16)]
    return max(float(np.linalg.norm(u - v)) for u in verts for v in verts)


def _start_point(f: SubmodularFunction) -> np.ndarray:
    if f.kind == "cardinality":
        return np.full(f.n, f.g[-1] / f.n)
    return edmonds_greedy(f, np.zeros(f.n))[0]


def _regret_curve(costs: np.ndarray, losses: np.ndarray, f: SubmodularFunction):
    """Regret against the best fixed point in hindsight (exact via greedy)."""
    total = np.sum(costs, axis=0)
    v, _ = edmonds_greedy(f, total, sense="min")
    comp_total = float(total @ v)
    comp_curve = np.cumsum(costs @ v)
    return np.cumsum(losses) - comp_curve, comp_total


def omd_run(f: SubmodularFunction, mp, stream: LossStream, eta: Optional[float] = None,
            projector: str = "pav", opts: Optional[SolverOptions] = None,
            check_every: int = 50) -> RunTrace:
    """Online mirror descent: play x_{t-1}, observe c_t, mirror-step, project."""
    mp = get_map(mp)
    if mp.kind != "euclid" and f.kind == "cardinality" and float(np.min(f.marginals())) <= 0:
        raise ValueError("non-Euclidean OMD needs strictly positive marginals")
    if eta is None:
        eta = _diameter(f) / np.sqrt(stream.T)
    if eta <= 0:
        raise ValueError("eta must be positive")
    if opts is None:
        opts = SolverOptions(eps=1e-7)

    x = _start_point(f)
    losses = np.empty(stream.T)
    iters = np.zeros(stream.T)
    times = np.zeros(stream.T)
    prev_y = None
    prev_res = None
    reused = 0
    for t in range(stream.T):
        c = stream.costs[t]
        losses[t] = float(c @ x)
        y = mp.grad_inverse(mp.grad(x) - eta * c)
        if projector == "pav":
            res = pav_project(f, mp, y)
        elif projector == "afw":
            res = afw_project(f, mp, y, opts)
        elif projector == "a2fw":
            warm_chain = None
            warm_active = None
            if prev_res is not None:
                move = float(np.linalg.norm(y - prev_y))
                if move > 0:
                    warm_chain = infer_from_previous(
                        prev_res.x, prev_y, y, eps=move, mp=mp).chain
                    if len(warm_chain) == 0:
                        warm_chain = None
                if prev_res.active is not None and mp.kind == "euclid":
                    decision, _ = reuse_decision(prev_res.x, prev_res.active, prev_y, y)
                    # "reuse" certifies the old active set still covers the
                    # optimum; "unknown" degrades to an unguaranteed warm start
                    warm_active = prev_res.active
                    reused += decision == "reuse"
            res = a2fw_project(f, mp, y, warm_chain=warm_chain,
                               warm_active=warm_active, opts=opts)
        else:
            raise ValueError(f"unknown projector {projector!r}")
        x = res.x
        iters[t] = res.iterations
        times[t] = res.time_sec
        prev_y, prev_res = y, res
        if check_every and t % check_every == 0:
            if not membership(f, x, tol=1e-6 * (1 + abs(f.value(range(f.n))))):
                raise RuntimeError(f"round {t}: played point left the polytope")
    curve, comp = _regret_curve(stream.costs, losses, f)
    trace = RunTrace(losses, curve, iters, times, comp)
    trace.reused_rounds = reused
    return trace


def ofw_fpl_run(f: SubmodularFunction, stream: LossStream,
                eta_fpl: Optional[float] = None, seed: int = 0) -> RunTrace:
    """Follow-the-perturbed-leader: one greedy LO call per round."""
    if eta_fpl is None:
        eta_fpl = float(np.sqrt(f.n / stream.T))
    if eta_fpl <= 0:
        raise ValueError("eta_fpl must be positive")
    rng = substream(seed, "fpl")
    C = np.zeros(f.n)
    losses = np.empty(stream.T)
    for t in range(stream.T):
        p = rng.uniform(0.0, 1.0 / eta_fpl, f.n)
        x, _ = edmonds_greedy(f, C + p, sense="min")
        losses[t] = float(stream.costs[t] @ x)
        C += stream.costs[t]
    curve, comp = _regret_curve(stream.costs, losses, f)
    return RunTrace(losses, curve, np.zeros(stream.T), np.zeros(stream.T), comp)
