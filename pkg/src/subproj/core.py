"""Ground sets, submodular function oracles, chains and level partitions."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


def _as_frozenset(S) -> frozenset:
    return S if isinstance(S, frozenset) else frozenset(S)


class SubmodularFunction:
    """Evaluation oracle for a set function f on subsets of {0, ..., n-1}.

    Subclasses implement ``_value``.  ``value`` wraps it with an evaluation
    counter (the EO count used in complexity assertions).
    """

    kind: str = "abstract"

    def __init__(self, n: int, integral: bool = False):
        if n < 1:
            raise ValueError("ground set must have at least one element")
        self.n = int(n)
        self.integral = bool(integral)
        self._evals = 0
        self._lock = threading.Lock()

    @property
    def evals(self) -> int:
        return self._evals

    def value(self, S: Iterable[int]) -> float:
        with self._lock:
            self._evals += 1
        return self._value(_as_frozenset(S))

    def _value(self, S: frozenset) -> float:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


class CardinalityFunction(SubmodularFunction):
    """f(S) = g(|S|) with g concave and nondecreasing, g(0) = 0."""

    kind = "cardinality"

    def __init__(self, g: Sequence[float], check: bool = True):
        g = [float(v) for v in g]
        n = len(g) - 1
        if check:
            if n < 1 or g[0] != 0.0:
                raise ValueError("g must have g[0] = 0 and length n+1 with n >= 1")
            for k in range(n):
                if g[k + 1] < g[k]:
                    raise ValueError(f"g not nondecreasing at k={k + 1}")
            for k in range(1, n):
                if g[k + 1] - g[k] > g[k] - g[k - 1] + 1e-12 * (1.0 + abs(g[k])):
                    raise ValueError(f"g not concave at k={k}")
        integral = all(float(v).is_integer() for v in g)
        super().__init__(max(n, 1), integral=integral)
        self.g = tuple(g)

    def _value(self, S: frozenset) -> float:
        return self.g[len(S)]

    def marginals(self) -> np.ndarray:
        """Marginal gains g(k) - g(k-1), k = 1..n (the sorted vertex)."""
        if not hasattr(self, "_marginals"):
            g = np.asarray(self.g)
            self._marginals = g[1:] - g[:-1]
            self._marginals.setflags(write=False)
        return self._marginals

    def to_json(self) -> dict:
        return {"kind": "cardinality", "g": list(self.g)}


class CoverageFunction(SubmodularFunction):
    """f(S) = |union of the source sets indexed by S| over a finite universe."""

    kind = "coverage"

    def __init__(self, sets: Sequence[Iterable[int]], universe: int, check: bool = True):
        masks = []
        for T in sets:
            m = 0
            for u in T:
                if check and not (0 <= u < universe):
                    raise ValueError(f"universe element {u} out of range")
                m |= 1 << u
            masks.append(m)
        super().__init__(len(masks), integral=True)
        self.universe = int(universe)
        self.set_masks = tuple(masks)

    def _value(self, S: frozenset) -> float:
        m = 0
        for i in S:
            m |= self.set_masks[i]
        return float(m.bit_count())

    def to_json(self) -> dict:
        sets = [[u for u in range(self.universe) if m >> u & 1] for m in self.set_masks]
        return {"kind": "coverage", "universe": self.universe, "sets": sets}


class ExplicitFunction(SubmodularFunction):
    """f given by a table of 2^n values indexed by bitmask (element i = bit i)."""

    kind = "explicit"

    def __init__(self, n: int, values: Sequence[float], check: bool = True):
        if n > 22:
            raise ValueError("explicit tables limited to n <= 22")
        if len(values) != 1 << n:
            raise ValueError("values table must have 2^n entries")
        values = np.asarray(values, dtype=float)
        if check:
            if values[0] != 0.0:
                raise ValueError("f(empty set) must be 0")
            rep = _first_violation(n, values)
            if rep is not None:
                what, A, B = rep
                raise ValueError(f"function is not {what}: witness {sorted(A)}, {sorted(B)}")
        integral = bool(np.all(values == np.round(values)))
        super().__init__(n, integral=integral)
        self.values = values

    def _value(self, S: frozenset) -> float:
        m = 0
        for i in S:
            m |= 1 << i
        return float(self.values[m])

    def to_json(self) -> dict:
        return {"kind": "explicit", "n": self.n, "values": self.values.tolist()}


class ShiftedFunction(SubmodularFunction):
    """f'(S) = f(S) - x(S) for a modular shift x (used by membership's SFM)."""

    kind = "shifted"

    def __init__(self, base: SubmodularFunction, x: np.ndarray):
        super().__init__(base.n, integral=False)
        self.base = base
        self.x = np.asarray(x, dtype=float)

    def _value(self, S: frozenset) -> float:
        return self.base.value(S) - float(sum(self.x[i] for i in S))


def _value_table(oracle: SubmodularFunction) -> np.ndarray:
    """All 2^n values of the oracle, indexed by bitmask."""
    n = oracle.n
    out = np.empty(1 << n)
    for m in range(1 << n):
        out[m] = oracle.value([i for i in range(n) if m >> i & 1])
    return out


def _first_violation(n, values, tol: float = 1e-12):
    """First monotonicity or submodularity violation in a mask-indexed table."""
    scale = 1.0 + float(np.max(np.abs(values)))
    for m in range(1 << n):
        for i in range(n):
            if m >> i & 1:
                continue
            if values[m | 1 << i] < values[m] - tol * scale:
                A = frozenset(j for j in range(n) if m >> j & 1)
                return ("monotone", A | {i}, A)
    for m in range(1 << n):
        for i in range(n):
            if m >> i & 1:
                continue
            for j in range(i + 1, n):
                if m >> j & 1:
                    continue
                lhs = values[m | 1 << i] + values[m | 1 << j]
                rhs = values[m | 1 << i | 1 << j] + values[m]
                if lhs < rhs - tol * scale:
                    S = frozenset(k for k in range(n) if m >> k & 1)
                    return ("submodular", S | {i}, S | {j})
    return None


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    zero_at_empty: bool
    monotone_witness: Optional[tuple] = None       # (A, B) with A >= B but f(A) < f(B)
    submodular_witness: Optional[tuple] = None     # (A, B) violating f(A)+f(B) >= f(A|B)+f(A&B)
    message: str = ""


def validate_submodular(oracle: SubmodularFunction) -> ValidationReport:
    """Exhaustively check f(empty)=0, monotonicity and submodularity.

    Explicit/coverage kinds require n <= 22 (2^n table); the cardinality kind
    is checked directly on g at any n.
    """
    if oracle.kind == "cardinality":
        g = oracle.g
        if g[0] != 0.0:
            return ValidationReport(False, False, message="g[0] != 0")
        for k in range(oracle.n):
            if g[k + 1] < g[k]:
                A = frozenset(range(k + 1))
                B = frozenset(range(k))
                return ValidationReport(False, True, monotone_witness=(A, B),
                                        message=f"g decreasing at k={k + 1}")
        for k in range(1, oracle.n):
            if g[k + 1] - g[k] > g[k] - g[k - 1]:
                A = frozenset(range(k))
                B = frozenset(range(k - 1)) | {k}
                return ValidationReport(False, True, submodular_witness=(A, B),
                                        message=f"g not concave at k={k}")
        return ValidationReport(True, True)

    if oracle.n > 22:
        raise ValueError("exhaustive validation limited to n <= 22")
    values = _value_table(oracle)
    zero = bool(values[0] == 0.0)
    rep = _first_violation(oracle.n, values)
    if rep is None:
        if not zero:
            return ValidationReport(False, False, message="f(empty set) != 0")
        return ValidationReport(True, True)
    what, A, B = rep
    if what == "monotone":
        return ValidationReport(False, zero, monotone_witness=(A, B),
                                message=f"monotonicity violated by {sorted(A)} vs {sorted(B)}")
    return ValidationReport(False, zero, submodular_witness=(A, B),
                            message=f"submodularity violated by {sorted(A)}, {sorted(B)}")


def load_function(spec, check: bool = True) -> SubmodularFunction:
    """Build an oracle from a JSON spec dict (or a path to a JSON file)."""
    if isinstance(spec, (str, bytes)):
        with open(spec, encoding="utf-8") as fh:
            spec = json.load(fh)
    kind = spec.get("kind")
    if kind == "cardinality":
        return CardinalityFunction(spec["g"], check=check)
    if kind == "coverage":
        return CoverageFunction(spec["sets"], spec["universe"], check=check)
    if kind == "explicit":
        return ExplicitFunction(spec["n"], spec["values"], check=check)
    raise ValueError(f"unknown function kind: {kind!r}")


def permutahedron(n: int) -> CardinalityFunction:
    """g(k) = n + (n-1) + ... + (n-k+1); vertices are permutations of 1..n."""
    g = [0]
    for k in range(1, n + 1):
        g.append(g[-1] + (n - k + 1))
    return CardinalityFunction(g)


@dataclass(frozen=True)
class Chain:
    """Strictly nested nonempty sets S_1 < ... < S_k (the last may equal E)."""

    sets: tuple

    def __init__(self, sets: Iterable[Iterable[int]]):
        fs = tuple(_as_frozenset(S) for S in sets)
        for i, S in enumerate(fs):
            if not S:
                raise ValueError("chain sets must be nonempty")
            if i > 0 and not (fs[i - 1] < S):
                raise ValueError("chain sets must be strictly nested")
        object.__setattr__(self, "sets", fs)

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def with_ground_set(self, n: int) -> "Chain":
        """Append E = {0..n-1} as the final set if absent."""
        E = frozenset(range(n))
        if self.sets and self.sets[-1] == E:
            return self
        return Chain(self.sets + (E,))

    def blocks(self) -> list:
        """Increment blocks S_i \\ S_{i-1} in chain order."""
        out, prev = [], frozenset()
        for S in self.sets:
            out.append(S - prev)
            prev = S
        return out

    def to_json(self) -> list:
        return [sorted(S) for S in self.sets]


@dataclass(frozen=True)
class LevelPartition:
    """Blocks F_1..F_k of E with strictly increasing levels c_1 < ... < c_k."""

    blocks: tuple
    levels: tuple

    def __init__(self, blocks: Iterable[Iterable[int]], levels: Iterable[float]):
        b = tuple(_as_frozenset(B) for B in blocks)
        c = tuple(float(v) for v in levels)
        if len(b) != len(c):
            raise ValueError("blocks/levels length mismatch")
        for i in range(1, len(c)):
            if not c[i] > c[i - 1]:
                raise ValueError("levels must strictly increase")
        seen = set()
        for B in b:
            if not B or B & seen:
                raise ValueError("blocks must be nonempty and disjoint")
            seen |= B
        object.__setattr__(self, "blocks", b)
        object.__setattr__(self, "levels", c)

    @property
    def k(self) -> int:
        return len(self.blocks)

    def face_dim(self, n: int) -> int:
        return n - self.k

    def chain(self) -> Chain:
        prefixes, acc = [], frozenset()
        for B in self.blocks:
            acc = acc | B
            prefixes.append(acc)
        return Chain(prefixes)


@dataclass
class ProjectionResult:
    """A projection point with its optimality certificate and run counters."""

    x: np.ndarray
    chain: Chain
    levels: LevelPartition
    active: object = None          # ActiveSet when produced by a FW solver
    fw_gap: float = 0.0
    iterations: int = 0
    restarts: int = 0
    lo_calls: int = 0
    pool_calls: int = 0
    exact: bool = False
    dual_residual: Optional[float] = None
    time_sec: float = 0.0
    converged: bool = True

    def to_json(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "chain": self.chain.to_json(),
            "levels": [float(c) for c in self.levels.levels],
            "blocks": [sorted(B) for B in self.levels.blocks],
            "fw_gap": float(self.fw_gap),
            "iterations": self.iterations,
            "restarts": self.restarts,
            "lo_calls": self.lo_calls,
            "pool_calls": self.pool_calls,
            "exact": self.exact,
            "dual_residual": None if self.dual_residual is None else float(self.dual_residual),
            "time_sec": self.time_sec,
            "converged": self.converged,
        }


def level_tolerance(gradient: np.ndarray) -> float:
    """Default relative tolerance for merging gradient levels."""
    return 1e-9 * (1.0 + float(np.max(np.abs(gradient))) if gradient.size else 1.0)


def minimal_face_certificate(gradient, tol: Optional[float] = None) -> LevelPartition:
    """Group gradient coordinates into level blocks (transitively, after sorting).

    Coordinates whose sorted gradient values differ by <= tol chain into one
    block; the induced prefixes are the tight chain of the minimal face.
    """
    gradient = np.asarray(gradient, dtype=float)
    if tol is None:
        tol = level_tolerance(gradient)
    if tol <= 0:
        raise ValueError("tol must be positive")
    order = sorted(range(len(gradient)), key=lambda i: (gradient[i], i))
    blocks, levels = [], []
    cur = [order[0]]
    for i in order[1:]:
        if gradient[i] - gradient[cur[-1]] <= tol:
            cur.append(i)
        else:
            blocks.append(frozenset(cur))
            levels.append(float(np.mean(gradient[cur])))
            cur = [i]
    blocks.append(frozenset(cur))
    levels.append(float(np.mean(gradient[cur])))
    return LevelPartition(blocks, levels)
