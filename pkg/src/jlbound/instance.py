"""The hard point sequences (0, e_1..e_d, y_S1..y_SQ) and their counting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .geometry import PointSequence

DEFAULT_CK = 256.0


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class HardInstanceParams:
    n: int
    d: int
    eps: float
    k: int
    Q: int
    c_k: float = DEFAULT_CK

    def __post_init__(self):
        if self.n < 2:
            raise InstanceError("n must be at least 2")
        if not 1 <= self.k <= self.d:
            raise InstanceError(f"need 1 <= k <= d, got k={self.k}, d={self.d}")
        if self.Q < 0:
            raise InstanceError(f"Q must be nonnegative, got {self.Q}")
        if self.Q != self.n - self.d - 1:
            raise InstanceError(f"Q must equal n - d - 1 = {self.n - self.d - 1}, got {self.Q}")
        if not 0 < self.eps < 1:
            raise InstanceError("eps must lie in (0, 1)")

    @property
    def gap(self) -> float:
        return 1.0 / math.sqrt(self.k)

    @classmethod
    def manual(cls, d: int, k: int, Q: int, eps: float = 0.1, c_k: float = DEFAULT_CK):
        """Parameters chosen directly rather than derived from (n, eps)."""
        return cls(n=d + Q + 1, d=d, eps=eps, k=k, Q=Q, c_k=c_k)

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "eps": self.eps, "k": self.k,
                "Q": self.Q, "c_k": self.c_k, "gap": self.gap}

    @classmethod
    def from_json(cls, obj: dict) -> "HardInstanceParams":
        return cls(n=int(obj["n"]), d=int(obj["d"]), eps=float(obj["eps"]),
                   k=int(obj["k"]), Q=int(obj["Q"]), c_k=float(obj.get("c_k", DEFAULT_CK)))


@dataclass(frozen=True)
class SupportSet:
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise InstanceError(f"support has repeated indices: {self.indices}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, j):
        return j in self.indices

    def validate(self, k: int, d: int) -> None:
        if len(self.indices) != k:
            raise InstanceError(f"support {self.indices} has size {len(self.indices)}, expected {k}")
        if self.indices and (self.indices[0] < 1 or self.indices[-1] > d):
            raise InstanceError(f"support {self.indices} leaves [1, {d}]")


def derive_params(n: int, eps: float, c_k: float = DEFAULT_CK) -> HardInstanceParams:
    """Size the hard instance for n points at distortion eps.

    d rounds n / lg(1/eps) to the nearest integer and k rounds eps^-2 / c_k,
    floored at 1. An instance without any y-points carries no information,
    so Q = n - d - 1 must be at least 1 here.
    """
    if not 0 < eps < 0.5:
        raise InstanceError(f"eps must lie in (0, 1/2), got {eps}")
    if c_k <= 0:
        raise InstanceError("c_k must be positive")
    d = int(round(n / math.log2(1.0 / eps)))
    k = max(1, int(round(eps ** -2 / c_k)))
    Q = n - d - 1
    if d < k:
        raise InstanceError(f"infeasible: d={d} < k={k} for n={n}, eps={eps}")
    if Q < 1:
        raise InstanceError(f"infeasible: Q = n - d - 1 = {Q} for n={n}, eps={eps}")
    return HardInstanceParams(n=n, d=d, eps=eps, k=k, Q=Q, c_k=c_k)


def make_support_vector(S: SupportSet, k: int, d: int) -> np.ndarray:
    S.validate(k, d)
    y = np.zeros(d)
    y[np.asarray(S.indices, dtype=np.int64) - 1] = 1.0 / math.sqrt(k)
    return y


@dataclass(frozen=True)
class HardInstance:
    params: HardInstanceParams
    supports: tuple[SupportSet, ...]
    points: PointSequence

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "supports": [list(s.indices) for s in self.supports],
            "points": self.points.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HardInstance":
        params = HardInstanceParams.from_json(obj["params"])
        inst = build_instance(params, supports=[SupportSet(tuple(s)) for s in obj["supports"]])
        if "points" in obj:
            given = PointSequence.from_json(obj["points"])
            if given.points.shape != inst.points.points.shape or not np.array_equal(
                given.points, inst.points.points
            ):
                raise InstanceError("stored points disagree with params and supports")
        return inst


def sample_supports(d: int, k: int, Q: int, seed: int) -> list[SupportSet]:
    """Q uniform k-subsets of [d]; each one comes from its own seeded stream."""
    out = []
    for ell in range(Q):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, ell])))
        perm = rng.permutation(d)[:k] + 1
        out.append(SupportSet(tuple(int(i) for i in perm)))
    return out


def build_instance(
    params: HardInstanceParams,
    supports: Optional[Sequence[SupportSet]] = None,
    seed: Optional[int] = None,
) -> HardInstance:
    if supports is None:
        if seed is None:
            raise InstanceError("give either supports or a seed")
        supports = sample_supports(params.d, params.k, params.Q, seed)
    supports = tuple(s if isinstance(s, SupportSet) else SupportSet(tuple(s)) for s in supports)
    if len(supports) != params.Q:
        raise InstanceError(f"expected {params.Q} supports, got {len(supports)}")
    for S in supports:
        S.validate(params.k, params.d)

    d = params.d
    rows = [np.zeros(d)]
    rows.extend(np.eye(d))
    rows.extend(make_support_vector(S, params.k, d) for S in supports)
    pts = PointSequence(d, np.vstack(rows))
    return HardInstance(params, supports, pts)


def family_size(d: int, k: int, Q: int) -> dict:
    """Exact size binom(d, k)^Q of the family plus the counting chain.

    The chain binom^Q >= (binom/2)^Q >= (d/(2k))^(kQ) is checked with exact
    rationals.
    """
    if k > d or k < 0 or d < 0:
        raise InstanceError(f"need 0 <= k <= d, got k={k}, d={d}")
    if Q < 0:
        raise InstanceError("Q must be nonnegative")
    b = math.comb(d, k)
    size = b ** Q
    half = Fraction(b, 2) ** Q
    floor_term = Fraction(d, 2 * k) ** (k * Q) if k > 0 else Fraction(1)
    return {
        "size": size,
        "binom": b,
        "first_step": size >= half,
        "second_step": half >= floor_term,
        "chain_holds": size >= half >= floor_term,
        "log2_size": Q * math.log2(b) if b > 0 else -math.inf,
        "log2_floor": float(k * Q * math.log2(d / (2 * k))) if k > 0 else 0.0,
    }


def lower_bound_m(n: int, eps: float) -> float:
    """eps^-2 * lg(eps^2 n), reported with constant 1; 0 when eps^2 n <= 1."""
    t = eps * eps * n
    if t <= 1.0:
        return 0.0
    return math.log2(t) / (eps * eps)
