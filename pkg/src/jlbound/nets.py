"""Deterministic coverings of origin-symmetric convex bodies.

Two body families are supported: scaled Euclidean balls and slices
``scale * (B_inf^d ∩ W)`` of the cube by a subspace ``W``. Both are described
in *intrinsic* coordinates: for a slice with orthonormal basis ``U`` (d x w),
the intrinsic point ``c`` stands for the ambient point ``U @ c``.

Nets are built by a greedy pass over an axis-aligned lattice, so the result
depends on nothing but the body and the radius.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree

from . import _lattice

RANK_TOL = 1e-10
MEMBER_SLACK = 1e-9
DEFAULT_BUDGET = 10**8


class NetError(ValueError):
    """Bad body description or net parameters."""


class NetBudgetError(NetError):
    """The candidate lattice would exceed the configured budget."""


class LocateError(LookupError):
    """No center covers the query point."""


@dataclass(frozen=True)
class SubspaceBasis:
    columns: np.ndarray

    @property
    def ambient_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def intrinsic_dim(self) -> int:
        return self.columns.shape[1]


def orthonormalize_columns(A, tol: float = RANK_TOL) -> SubspaceBasis:
    """Orthonormal basis of the column space of ``A``, built left to right.

    Modified Gram-Schmidt with one reorthogonalization pass. A column is
    dropped when its residual falls below ``tol`` times the largest column
    norm of ``A``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    scale = np.max(np.linalg.norm(A, axis=0)) if A.size else 0.0
    if scale == 0.0:
        raise NetError("zero matrix spans a zero-dimensional subspace")
    cutoff = tol * scale
    basis: list[np.ndarray] = []
    for j in range(A.shape[1]):
        v = A[:, j].copy()
        for _ in range(2):
            for u in basis:
                v -= (u @ v) * u
        nrm = np.linalg.norm(v)
        if nrm > cutoff:
            basis.append(v / nrm)
    cols = np.column_stack(basis)
    cols.setflags(write=False)
    return SubspaceBasis(cols)


@dataclass(frozen=True)
class L2Ball:
    dim: int
    radius: float

    def __post_init__(self):
        if self.dim < 1:
            raise NetError("ball dimension must be positive")
        if not self.radius > 0:
            raise NetError("ball radius must be positive")

    @property
    def intrinsic_dim(self) -> int:
        return self.dim

    @property
    def scale(self) -> float:
        return float(self.radius)

    def scaled(self, t: float) -> "L2Ball":
        return L2Ball(self.dim, self.radius * t)

    def to_ambient(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c, dtype=np.float64)

    def key(self) -> tuple:
        return ("l2", self.dim, float(self.radius))

    def to_json(self) -> dict:
        return {"variant": "L2Ball", "dim": self.dim, "radius": self.radius}


@dataclass(frozen=True, eq=False)
class SliceBody:
    """``scale * (B_inf^d ∩ span(basis))`` in intrinsic coordinates."""

    basis: np.ndarray
    scale: float

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.basis, dtype=np.float64))
        if B.ndim != 2 or B.shape[1] < 1:
            raise NetError("slice basis must be a d x w matrix with w >= 1")
        if not np.allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-9, rtol=0):
            raise NetError("slice basis columns are not orthonormal")
        if not self.scale > 0:
            raise NetError("slice scale must be positive")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def intrinsic_dim(self) -> int:
        return self.basis.shape[1]

    def scaled(self, t: float) -> "SliceBody":
        return SliceBody(self.basis, self.scale * t)

    def to_ambient(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c, dtype=np.float64) @ self.basis.T

    def key(self) -> tuple:
        return ("slice", self.basis.shape, self.basis.tobytes(), self.scale)

    def __eq__(self, other):
        return isinstance(other, SliceBody) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def to_json(self) -> dict:
        return {
            "variant": "SliceBody",
            "ambient_dim": self.ambient_dim,
            "basis": self.basis.tolist(),
            "scale": self.scale,
        }


Body = Union[L2Ball, SliceBody]


def body_from_json(obj: dict) -> Body:
    if obj["variant"] == "L2Ball":
        return L2Ball(int(obj["dim"]), float(obj["radius"]))
    if obj["variant"] == "SliceBody":
        return SliceBody(np.asarray(obj["basis"], dtype=np.float64), float(obj["scale"]))
    raise NetError(f"unknown body variant {obj['variant']!r}")


def _kind(body: Body) -> int:
    return _lattice.L2 if isinstance(body, L2Ball) else _lattice.LINF


def _unit_matrix(body: Body) -> np.ndarray:
    if isinstance(body, L2Ball):
        return np.eye(body.dim)
    return np.ascontiguousarray(body.basis)


def _unit_norms(body: Body, C: np.ndarray) -> np.ndarray:
    """Minkowski functional of the *unscaled* body, row-wise."""
    C = np.atleast_2d(C)
    if isinstance(body, L2Ball):
        return np.linalg.norm(C, axis=1)
    return np.max(np.abs(C @ body.basis.T), axis=1)


def body_norm(body: Body, c) -> float:
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (body.intrinsic_dim,):
        raise NetError(f"expected an intrinsic vector of length {body.intrinsic_dim}, got {c.shape}")
    return float(_unit_norms(body, c[None, :])[0] / body.scale)


def _half_widths(body: Body) -> np.ndarray:
    """Per-axis extent of the unit body in intrinsic coordinates."""
    w = body.intrinsic_dim
    if isinstance(body, L2Ball):
        return np.ones(w)
    B = body.basis
    A_ub = np.vstack([B, -B])
    b_ub = np.ones(2 * B.shape[0])
    out = np.empty(w)
    for i in range(w):
        cost = np.zeros(w)
        cost[i] = -1.0
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * w, method="highs")
        if res.status != 0:
            # column l1 norms always bound the extent
            out[i] = np.abs(B[:, i]).sum()
        else:
            out[i] = min(-res.fun, np.abs(B[:, i]).sum())
    return out * (1.0 + 1e-7) + 1e-12


@dataclass(frozen=True, eq=False)
class Net:
    body: Body
    radius: float
    centers: np.ndarray
    grid_spacing: float
    _tree: list = field(default_factory=list, repr=False, compare=False)

    def __len__(self) -> int:
        return self.centers.shape[0]

    @property
    def relative_radius(self) -> float:
        return self.radius / self.body.scale

    def ambient_centers(self) -> np.ndarray:
        return self.body.to_ambient(self.centers)

    def tree(self) -> cKDTree:
        if not self._tree:
            self._tree.append(cKDTree(self.ambient_centers()))
        return self._tree[0]

    def to_json(self) -> dict:
        return {
            "body": self.body.to_json(),
            "radius": self.radius,
            "grid_spacing": self.grid_spacing,
            "centers": self.centers.tolist(),
        }


def _metric_p(body: Body) -> float:
    return 2.0 if isinstance(body, L2Ball) else np.inf


def _offsets(body, B, kind, spacing, widths, rel):
    """Lex-positive lattice offsets whose unit-body norm is at most ``rel``."""
    w = len(widths)
    P = np.ceil(widths * rel / spacing - 1e-9).astype(np.int64) + 1
    axes = [np.arange(-p, p + 1) for p in P]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(w, -1).T
    nz = grid[np.any(grid != 0, axis=1)]
    first = np.argmax(nz != 0, axis=1)
    positive = nz[np.arange(len(nz)), first] > 0
    nz = nz[positive]
    norms = _unit_norms(body, nz * spacing)
    keep = norms <= rel * (1 + 1e-12)
    return nz[keep], norms[keep], P


def build_net(body: Body, eps: float, *, budget: int = DEFAULT_BUDGET, workers: int = 1) -> Net:
    """Cover ``body`` with translates of ``eps``-radius body-norm balls.

    ``eps`` is absolute; ``eps / body.scale`` must lie in (0, 1]. At exactly 1
    the origin alone covers the body. Otherwise a lattice of spacing
    ``eps/4`` (finer when the intrinsic dimension exceeds 4, so that every
    body point stays within ``eps/4`` of a lattice point) is filtered to the
    body, lattice points just outside are pulled radially onto the boundary,
    and a lexicographic greedy pass keeps every candidate more than
    ``eps/2`` from all centers chosen before it.
    """
    rel = eps / body.scale
    if not (0 < rel <= 1):
        raise NetError(f"net radius must be in (0, scale], got eps={eps} for scale {body.scale}")
    w = body.intrinsic_dim
    if rel >= 1:
        return Net(body, float(eps), np.zeros((1, w)), float(eps))

    kind = _kind(body)
    B = _unit_matrix(body)
    spacing = rel / (2.0 * max(2.0, math.sqrt(w)))
    clamp_limit = 1.0 + rel / 4.0
    widths = _half_widths(body)
    K = np.floor(widths * clamp_limit / spacing + 1e-9).astype(np.int64)

    offs, offnorm, pads = _offsets(body, B, kind, spacing, widths, rel)
    shape = 2 * K + 1 + 2 * pads
    total = int(np.prod(shape.astype(object)))
    if total > budget:
        raise NetBudgetError(f"lattice needs {total} cells, budget is {budget}")
    strides = np.ones(w, dtype=np.int64)
    for i in range(w - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]

    state = np.zeros(total, dtype=np.uint8)
    bounds = np.linspace(0, total, max(1, workers) * 4 + 1).astype(np.int64)
    args = (shape, strides, pads, K, B, kind, spacing, clamp_limit)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(lambda ab: _lattice.classify_cells(state, ab[0], ab[1], *args),
                          zip(bounds[:-1], bounds[1:])))
    else:
        for a, b in zip(bounds[:-1], bounds[1:]):
            _lattice.classify_cells(state, a, b, *args)

    flat_off = offs @ strides
    half = rel / 2.0
    bands = (
        offnorm <= half,
        (offnorm > half) & (offnorm <= 0.75 * rel * (1 + 1e-12)),
        offnorm > 0.75 * rel * (1 + 1e-12),
    )
    near, ring_in, ring_out = bands
    c = np.ascontiguousarray
    chosen = _lattice.greedy_select(
        state, strides, pads, K, B, kind, spacing, half,
        c(flat_off[near]), c(offs[near]), c(offnorm[near]),
        c(flat_off[ring_in]), c(offs[ring_in]),
        c(flat_off[ring_out]), c(offs[ring_out]),
    )

    idx = np.stack(np.unravel_index(chosen, tuple(int(s) for s in shape)), axis=1)
    unit = (idx - pads - K) * spacing
    norms = _unit_norms(body, unit) if len(unit) else np.zeros(0)
    outside = norms > 1.0
    unit[outside] /= norms[outside, None]
    centers = unit * body.scale
    centers.setflags(write=False)
    return Net(body, float(eps), centers, float(spacing * body.scale))


def locate(net: Net, x) -> int:
    """Smallest center index within ``net.radius`` of ``x`` in the body norm."""
    x = np.asarray(x, dtype=np.float64)
    body = net.body
    if x.shape != (body.intrinsic_dim,):
        raise NetError(f"expected an intrinsic vector of length {body.intrinsic_dim}, got {x.shape}")
    hits = net.tree().query_ball_point(body.to_ambient(x), net.radius * (1 + 1e-6), p=_metric_p(body))
    if hits:
        hits = np.sort(np.asarray(hits))
        dist = _unit_norms(body, net.centers[hits] - x) * (1.0 / body.scale)
        ok = np.flatnonzero(dist <= net.relative_radius * (1 + MEMBER_SLACK))
        if ok.size:
            return int(hits[ok[0]])
    raise LocateError(
        f"no center within {net.radius} of the query point (body norm {body_norm(body, x):.6g})"
    )


def nearest_distances(net: Net, X: np.ndarray) -> np.ndarray:
    """Body-norm distance (absolute units) from each row of X to its nearest center."""
    amb = net.body.to_ambient(np.atleast_2d(X))
    dist, _ = net.tree().query(amb, k=1, p=_metric_p(net.body))
    return np.asarray(dist)


def min_center_separation(net: Net) -> float:
    """Smallest pairwise body-norm distance between centers (absolute units)."""
    if len(net) < 2:
        return math.inf
    amb = net.ambient_centers()
    tree = net.tree()
    dist, _ = tree.query(amb, k=2, p=_metric_p(net.body))
    return float(dist[:, 1].min())


def verify_cover_bound(net: Net) -> dict:
    """Compare the center count with the packing bound and the volume bound."""
    w = net.body.intrinsic_dim
    rel = net.relative_radius
    count = len(net)
    packing = (1.0 + 4.0 / rel) ** w
    volume = 2.0 ** (w * math.log2(1.0 + 2.0 / rel))
    return {
        "count": count,
        "intrinsic_dim": w,
        "relative_radius": rel,
        "packing_bound": packing,
        "packing_ok": count <= packing,
        "volume_bound": volume,
        "volume_ratio": count / volume,
        "packing_ratio": count / packing,
    }


def sample_body(body: Body, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-random points of the body, intrinsic coordinates.

    Halton points in the bounding box, kept when inside; a quarter of the
    sample is pushed radially onto the boundary where coverage is thinnest.
    """
    from scipy.stats import qmc

    w = body.intrinsic_dim
    widths = _half_widths(body) * body.scale
    sampler = qmc.Halton(d=w, scramble=True, seed=seed)
    out = []
    have = 0
    while have < count:
        U = sampler.random(max(4 * count, 256))
        C = (2.0 * U - 1.0) * widths
        nrm = _unit_norms(body, C) / body.scale
        C = C[nrm <= 1.0]
        out.append(C)
        have += len(C)
    pts = np.vstack(out)[:count].copy()
    edge = count // 4
    nrm = _unit_norms(body, pts[:edge]) / body.scale
    nz = nrm > 0
    pts[:edge][nz] /= nrm[nz, None]
    return pts


def audit_net(net: Net, samples: int = 10_000, seed: int = 0) -> dict:
    """Covering, separation and cardinality checks for one net."""
    pts = sample_body(net.body, samples, seed)
    dist = nearest_distances(net, pts)
    cover_ok = bool(np.all(dist <= net.radius * (1 + MEMBER_SLACK)))
    sep = min_center_separation(net)
    in_body = _unit_norms(net.body, net.centers) / net.body.scale
    report = verify_cover_bound(net)
    report.update(
        samples=int(samples),
        max_cover_distance=float(dist.max()),
        covering_ok=cover_ok,
        min_separation=sep,
        separation_ok=bool(sep > 0.5 * net.radius * (1 - MEMBER_SLACK)),
        centers_in_body=bool(np.all(in_body <= 1 + MEMBER_SLACK)),
    )
    return report
