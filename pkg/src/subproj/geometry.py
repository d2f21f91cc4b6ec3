"""Monte Carlo and exact checks of projection geometry on base polytopes."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Chain, SubmodularFunction
from .pav import pav_project


@dataclass(frozen=True)
class BallSpec:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")


@dataclass(frozen=True)
class PerturbVerdict:
    cond1: bool   # x + eps_F in relint(F)
    cond2: bool   # y - x + eps_perp in cone(F)

    @property
    def same_face(self) -> bool:
        return self.cond1 and self.cond2


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    N: int


def substream(seed: int, *keys) -> np.random.Generator:
    """Deterministic, order-independent RNG substream named by (seed, keys).

    String keys are hashed with crc32; sample index i as final key gives a
    scheduling-independent per-sample generator.
    """
    ints = [int(seed) & 0xFFFFFFFF]
    for k in keys:
        ints.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) & 0xFFFFFFFF)
    return np.random.default_rng(ints)


def sample_ball(spec: BallSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from the solid ball: Gaussian direction, radius R*U^(1/n)."""
    n = spec.center.size
    d = rng.standard_normal(n)
    norm = float(np.linalg.norm(d))
    while norm == 0.0:
        d = rng.standard_normal(n)
        norm = float(np.linalg.norm(d))
    r = spec.radius * float(rng.random()) ** (1.0 / n)
    return spec.center + (r / norm) * d


def _project_chain(f, y, projector):
    if projector == "pav":
        res = pav_project(f, "euclid", y)
    else:
        from .fw import a2fw_project
        res = a2fw_project(f, "euclid", y)
    return res.levels, res.x


def mc_vertex_fraction(f: SubmodularFunction, spec: BallSpec, N: int, seed: int,
                       projector: str = "pav") -> MCEstimate:
    """Fraction of uniform ball samples whose projection is a vertex.

    A projection is a vertex exactly when its level-partition certificate has
    n blocks (minimal face dimension 0).
    """
    hits = 0
    for i in range(N):
        rng = substream(seed, "vertices", i)
        y = sample_ball(spec, rng)
        levels, _ = _project_chain(f, y, projector)
        hits += levels.k == f.n
    p = hits / N
    return MCEstimate(p, float(np.sqrt(p * (1.0 - p) / N)), N)


def mc_same_face(f: SubmodularFunction, spec: BallSpec, eps: float, N: int, seed: int,
                 projector: str = "pav", perturbation: str = "ball") -> MCEstimate:
    """Fraction of pairs (y, y + eps) projecting onto the same minimal face."""
    ball0 = BallSpec(np.zeros(f.n), eps)
    hits = 0
    for i in range(N):
        rng = substream(seed, "perturb", i)
        y = sample_ball(spec, rng)
        if perturbation == "ball":
            e = sample_ball(ball0, rng)
        elif perturbation == "gaussian":
            e = rng.standard_normal(f.n)
            norm = float(np.linalg.norm(e))
            if norm > eps:  # truncate to the eps-ball
                e *= eps * float(rng.random()) ** (1.0 / f.n) / norm
        else:
            raise ValueError("perturbation must be 'ball' or 'gaussian'")
        la, _ = _project_chain(f, y, projector)
        lb, _ = _project_chain(f, y + e, projector)
        hits += la.blocks == lb.blocks
    p = hits / N
    return MCEstimate(p, float(np.sqrt(p * (1.0 - p) / N)), N)


def _tight_rows(chain: Chain, n: int) -> np.ndarray:
    A = np.zeros((len(chain.sets), n))
    for i, S in enumerate(chain.sets):
        A[i, sorted(S)] = 1.0
    return A


def _split(eps_vec: np.ndarray, A: np.ndarray):
    """eps = eps_F + eps_perp with eps_perp in the rowspace of A."""
    coef, *_ = np.linalg.lstsq(A.T, eps_vec, rcond=None)
    eps_perp = A.T @ coef
    return eps_vec - eps_perp, eps_perp


def check_perturb_conditions(f: SubmodularFunction, chain: Chain, x, y,
                             eps_vec) -> PerturbVerdict:
    """Test the two perturbation conditions for (x, F) = projection of y.

    cond1: x + eps_F stays in the relative interior of the face (all
    non-chain constraints keep positive slack).  cond2: y - x + eps_perp
    stays in cone(F): blockwise constant with nonincreasing block values
    along the chain (the final multiplier on the ground set is unsigned).
    Together they hold iff y + eps projects onto the same minimal face.
    """
    n = f.n
    if n > 20:
        raise ValueError("exhaustive relint check limited to n <= 20")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eps_vec = np.asarray(eps_vec, dtype=float)
    chain = chain.with_ground_set(n)
    fE = f.value(range(n))
    scale = 1.0 + abs(fE)
    tol = 1e-8 * scale
    for S in chain:
        if abs(float(np.sum(x[sorted(S)])) - f.value(S)) > tol:
            raise ValueError(f"chain set {sorted(S)} is not tight at x")

    A = _tight_rows(chain, n)
    eps_F, eps_perp = _split(eps_vec, A)

    # cond1: strict slack on every non-chain subset after the in-face move
    xp = x + eps_F
    chain_masks = set()
    for S in chain:
        m = 0
        for e in S:
            m |= 1 << e
        chain_masks.add(m)
    strict_tol = 1e-10 * scale
    cond1 = True
    for m in range(1, (1 << n) - 1):
        if m in chain_masks:
            continue
        S = [i for i in range(n) if m >> i & 1]
        if f.value(S) - float(np.sum(xp[S])) <= strict_tol:
            cond1 = False
            break

    # cond2: blockwise constant, nonincreasing multiplier structure
    w = y - x + eps_perp
    blocks = chain.blocks()
    wtol = 1e-8 * (1.0 + float(np.max(np.abs(w))))
    vals = []
    cond2 = True
    for B in blocks:
        bw = w[sorted(B)]
        if float(np.max(bw) - np.min(bw)) > wtol:
            cond2 = False
            break
        vals.append(float(np.mean(bw)))
    if cond2:
        for i in range(len(vals) - 1):
            if vals[i] - vals[i + 1] < -wtol:
                cond2 = False
                break
    return PerturbVerdict(cond1, cond2)


def face_safety_radii(f: SubmodularFunction, chain: Chain, x, y):
    """Certified radii (delta1, delta2): ||eps|| < max(delta1, delta2) keeps
    the projection of y + eps on the same minimal face.

    delta1 lower-bounds how far x can move inside aff(F) before a non-chain
    constraint binds; delta2 lower-bounds how much the normal component can
    tilt before a cone multiplier goes negative.  Each raw bound certifies
    only its own condition, so both returned values are capped at the joint
    minimum - that keeps the max-of-the-two guarantee sound (conservative).
    """
    n = f.n
    if n > 20:
        raise ValueError("limited to n <= 20")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    chain = chain.with_ground_set(n)
    A = _tight_rows(chain, n)

    # raw cond1 radius: slack over the in-face component of each normal
    chain_masks = set()
    for S in chain:
        m = 0
        for e in S:
            m |= 1 << e
        chain_masks.add(m)
    d1 = np.inf
    for m in range(1, (1 << n) - 1):
        if m in chain_masks:
            continue
        S = [i for i in range(n) if m >> i & 1]
        v = np.zeros(n)
        v[S] = 1.0
        vF, _ = _split(v, A)
        nv = float(np.linalg.norm(vF))
        if nv < 1e-12:
            continue  # constraint parallel to aff(F): in-face moves never bind it
        slack = f.value(S) - float(np.sum(x[S]))
        d1 = min(d1, max(slack, 0.0) / nv)

    # raw cond2 radius: multiplier margins, normalized by how much a unit
    # perturbation can shift adjacent block averages
    blocks = chain.blocks()
    k = len(blocks)
    if k == 1:
        d2 = np.inf
    else:
        w = y - x
        vals = [float(np.mean(w[sorted(B)])) for B in blocks]
        d2 = np.inf
        for i in range(k - 1):
            lam = vals[i] - vals[i + 1]
            sens = 1.0 / np.sqrt(len(blocks[i])) + 1.0 / np.sqrt(len(blocks[i + 1]))
            d2 = min(d2, max(lam, 0.0) / sens)

    joint = min(d1, d2)
    return min(d1, joint), min(d2, joint)
