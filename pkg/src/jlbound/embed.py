"""Embeddings into R^m and the distributional-JL failure estimator.

Random matrices come from a counter-based generator (Philox) keyed by
``(seed, stream)``, so any trial or matrix can be regenerated on its own,
independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import GeometryError, PointSequence
from .nets import NetError, orthonormalize_columns

KINDS = ("gaussian", "isometry", "identity_perturbed", "composed")


def stream(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


@dataclass(frozen=True)
class ProjectionMatrix:
    entries: np.ndarray
    seed: int
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown projection kind {self.kind!r}")
        E = np.atleast_2d(np.asarray(self.entries, dtype=np.float64))
        E.setflags(write=False)
        object.__setattr__(self, "entries", E)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class DJLEstimate:
    eps: float
    m: int
    trials: int
    failures: int

    @property
    def delta_hat(self) -> float:
        return self.failures / self.trials

    @property
    def std_error(self) -> float:
        p = self.delta_hat
        return math.sqrt(p * (1.0 - p) / self.trials)

    def to_json(self) -> dict:
        return {"eps": self.eps, "m": self.m, "trials": self.trials,
                "failures": self.failures, "delta_hat": self.delta_hat,
                "std_error": self.std_error}


def _gaussian(d: int, m: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((m, d)) / math.sqrt(m)


def gaussian_projection(d: int, m: int, seed: int) -> ProjectionMatrix:
    """m x d matrix of i.i.d. N(0, 1/m) entries."""
    if d < 1 or m < 1:
        raise ValueError("d and m must be positive")
    return ProjectionMatrix(_gaussian(d, m, stream(seed, 0)), seed, "gaussian")


def perturbed_identity(d: int, sigma: float, seed: int) -> ProjectionMatrix:
    """I + sigma * G with G standard Gaussian; a mildly distorting square map."""
    G = stream(seed, 0).standard_normal((d, d))
    return ProjectionMatrix(np.eye(d) + sigma * G, seed, "identity_perturbed")


def random_rotation(d: int, seed: int) -> ProjectionMatrix:
    """Haar-random orthogonal d x d matrix (QR of a Gaussian, signs fixed)."""
    G = stream(seed, 0).standard_normal((d, d))
    Q, R = np.linalg.qr(G)
    Q = Q * np.sign(np.diag(R))
    return ProjectionMatrix(Q, seed, "isometry")


def span_isometry(X: PointSequence) -> PointSequence:
    """Express X in an orthonormal basis of span{X[i] - X[0]}.

    The result has dimension r = rank of the differences (1 when they all
    vanish, holding zero vectors) and X[0] maps to the origin.
    """
    if len(X) == 0:
        raise GeometryError("span_isometry needs at least one point")
    diffs = X.points - X.points[0]
    try:
        basis = orthonormalize_columns(diffs.T).columns
    except NetError:
        return PointSequence(1, np.zeros((len(X), 1)))
    return PointSequence(basis.shape[1], diffs @ basis)


def apply_embedding(P: ProjectionMatrix, X: PointSequence) -> PointSequence:
    if P.cols != X.dim:
        raise GeometryError(f"matrix has {P.cols} columns, points have dimension {X.dim}")
    return PointSequence(P.rows, X.points @ P.entries.T)


def compose_embeddings(f1: ProjectionMatrix, f2: ProjectionMatrix) -> ProjectionMatrix:
    """The map x -> f2(f1(x))."""
    if f2.cols != f1.rows:
        raise GeometryError(f"cannot compose: f1 maps to R^{f1.rows}, f2 expects R^{f2.cols}")
    return ProjectionMatrix(f2.entries @ f1.entries, f1.seed, "composed")


def djl_failure_rate(
    eps: float,
    d: int,
    m: int,
    trials: int,
    seed: int,
    u: Optional[np.ndarray] = None,
) -> DJLEstimate:
    """Fraction of Gaussian draws with | ||Pi u|| - ||u|| | > eps ||u||.

    Trial t draws its matrix from stream (seed, t); u defaults to e_1.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if trials < 1:
        raise ValueError("trials must be positive")
    if u is None:
        u = np.zeros(d)
        u[0] = 1.0
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (d,):
        raise GeometryError(f"test vector must have length {d}")
    nu = float(np.linalg.norm(u))
    failures = 0
    for t in range(trials):
        Pi = _gaussian(d, m, stream(seed, t))
        if abs(float(np.linalg.norm(Pi @ u)) - nu) > eps * nu:
            failures += 1
    return DJLEstimate(eps, m, trials, failures)


def djl_dimension(eps: float, delta: float, constant: float = 8.0) -> int:
    """ceil(constant * eps^-2 * ln(1/delta)); the constant is this toolkit's choice."""
    return math.ceil(constant * math.log(1.0 / delta) / (eps * eps))


def radial_scaling(X: PointSequence, eps_f: float, seed: int) -> PointSequence:
    """Scale each distinct point by an independent factor in [sqrt(1-eps_f), sqrt(1+eps_f)].

    Coincident points share a factor, so they stay coincident.
    """
    _, inverse = np.unique(X.points, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    rng = stream(seed, 1)
    factors = rng.uniform(math.sqrt(1 - eps_f), math.sqrt(1 + eps_f), size=inverse.max() + 1)
    return PointSequence(X.dim, X.points * factors[inverse][:, None])
