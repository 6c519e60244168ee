"""Compress an embedded hard instance into net indices and decode it back.

Encoding: each f(e_j) is rounded to a center of a fixed net C2 of the ball
of radius 1 + eps_f; those centers are the rows of A. The vectors
v_l = A f(y_l) live in the column space W of A and inside
outer_scale * (B_inf^d ∩ W), so each is written as an index into a net
C_inf of that slice. Decoding rebuilds both nets from the header, reads off
c_inf(y_l) and thresholds its coordinates at gap / 2.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .geometry import PointSequence, check_jl_guarantee, translate_to_origin
from .instance import HardInstance, SupportSet
from .nets import (
    L2Ball,
    LocateError,
    Net,
    SliceBody,
    body_norm,
    build_net,
    locate,
    orthonormalize_columns,
)

MAGIC = b"JLLB"
VERSION = 1
HEADER = struct.Struct("<4sBIIIIIBdddQQ")
HEADER_BITS = 8 * HEADER.size
OUTER_SLACK = 1e-6
LEMMA_SLACK = 1e-9
# distortion tolerated when the budget claims an exact isometry
ISOMETRY_TOL = 1e-9
# C_inf lattices for d = m = 4 at eps_net = 0.15 need ~1.3e8 cells
CODEC_NET_BUDGET = 4 * 10**8


class CodecError(ValueError):
    pass


class BudgetError(CodecError):
    """The error budget does not guarantee decoding."""


@dataclass(frozen=True)
class CodecBudget:
    eps_f: float
    eps_net: float
    gap: float

    @property
    def lemma_bound(self) -> float:
        return 4.0 * self.eps_f + 2.0 * self.eps_net

    @property
    def outer_scale(self) -> float:
        return self.lemma_bound + self.gap

    @property
    def total_error(self) -> float:
        return self.lemma_bound + self.eps_net

    @property
    def threshold(self) -> float:
        return self.gap / 2.0

    @property
    def feasible(self) -> bool:
        return self.total_error < self.threshold

    def to_json(self) -> dict:
        return {
            "eps_f": self.eps_f, "eps_net": self.eps_net, "gap": self.gap,
            "lemma_bound": self.lemma_bound, "outer_scale": self.outer_scale,
            "total_error": self.total_error, "threshold": self.threshold,
            "feasible": self.feasible,
        }


def plan_budget(eps_f: float, eps_net: float, gap: float, strict: bool = True) -> CodecBudget:
    """Error budget for given embedding distortion, net radius and gap.

    With ``strict`` an infeasible budget (total error >= gap / 2) raises;
    otherwise it is returned with ``feasible`` False.
    """
    if eps_f < 0 or eps_net <= 0 or gap <= 0:
        raise CodecError("need eps_f >= 0, eps_net > 0, gap > 0")
    budget = CodecBudget(float(eps_f), float(eps_net), float(gap))
    if strict and not budget.feasible:
        raise BudgetError(
            f"total coordinate error {budget.total_error:.6g} is not below gap/2 = {budget.threshold:.6g}"
        )
    return budget


def index_width(size: int) -> int:
    if size < 1:
        raise CodecError("net size must be positive")
    return max(1, (size - 1).bit_length())


def predict_bits(d: int, Q: int, c2_size: int, cinf_size: int) -> int:
    bits = HEADER_BITS + d * index_width(c2_size) + Q * index_width(cinf_size)
    return 8 * math.ceil(bits / 8)


@dataclass(frozen=True)
class Header:
    n: int
    d: int
    Q: int
    k: int
    m: int
    w: int
    eps_f: float
    eps_net: float
    gap: float
    c2_size: int
    cinf_size: int

    def pack(self) -> bytes:
        return HEADER.pack(MAGIC, VERSION, self.n, self.d, self.Q, self.k, self.m, self.w,
                           self.eps_f, self.eps_net, self.gap, self.c2_size, self.cinf_size)

    @classmethod
    def unpack(cls, data: bytes) -> "Header":
        if len(data) < HEADER.size:
            raise CodecError("stream shorter than its header")
        magic, version, *rest = HEADER.unpack_from(data)
        if magic != MAGIC:
            raise CodecError(f"bad magic {magic!r}")
        if version != VERSION:
            raise CodecError(f"unsupported version {version}")
        return cls(*rest)


@dataclass(frozen=True)
class Bitstream:
    data: bytes

    @property
    def header(self) -> Header:
        return Header.unpack(self.data)

    @property
    def bit_length(self) -> int:
        return 8 * len(self.data)


class BitWriter:
    """MSB-first bit packer."""

    def __init__(self):
        self._acc = 0
        self._nbits = 0

    def write(self, value: int, width: int) -> None:
        if value < 0 or value >> width:
            raise CodecError(f"value {value} does not fit in {width} bits")
        self._acc = (self._acc << width) | value
        self._nbits += width

    def getvalue(self) -> bytes:
        pad = (-self._nbits) % 8
        nbytes = (self._nbits + pad) // 8
        return (self._acc << pad).to_bytes(nbytes, "big")


class BitReader:
    def __init__(self, data: bytes):
        self._value = int.from_bytes(data, "big")
        self._total = 8 * len(data)
        self._pos = 0

    def read(self, width: int) -> int:
        if self._pos + width > self._total:
            raise CodecError("payload truncated")
        shift = self._total - self._pos - width
        self._pos += width
        return (self._value >> shift) & ((1 << width) - 1)


@lru_cache(maxsize=4)
def _ball_net(m: int, eps_f: float, eps_net: float, budget: int) -> Net:
    return build_net(L2Ball(m, 1.0 + eps_f), eps_net, budget=budget)


_slice_cache: dict = {}


def _slice_net(body: SliceBody, eps_net: float, budget: int) -> Net:
    key = (body.key(), eps_net, budget)
    net = _slice_cache.get(key)
    if net is None:
        net = build_net(body, eps_net, budget=budget)
        if len(_slice_cache) >= 8:
            _slice_cache.pop(next(iter(_slice_cache)))
        _slice_cache[key] = net
    return net


def clear_net_cache() -> None:
    _ball_net.cache_clear()
    _slice_cache.clear()


def _center_matrix(c2: Net, indices: Sequence[int]) -> np.ndarray:
    return np.array(c2.centers[list(indices)], dtype=np.float64)


def _slice_from_A(A: np.ndarray, budget: CodecBudget) -> SliceBody:
    basis = orthonormalize_columns(A).columns
    return SliceBody(basis, budget.outer_scale)


@dataclass(frozen=True)
class EncodeTrace:
    """Intermediate quantities of one encoding, for auditing."""

    A: np.ndarray
    v: np.ndarray
    cinf: np.ndarray
    c2_size: int
    cinf_size: int
    w: int


def encode(
    instance: HardInstance,
    Y: PointSequence,
    budget: CodecBudget,
    *,
    net_budget: int = CODEC_NET_BUDGET,
    allow_infeasible: bool = False,
    trace: bool = False,
):
    """Write the supports of ``instance`` as net indices, given its embedding Y.

    Y must embed ``instance.points`` within distortion ``budget.eps_f``; it is
    translated so that the image of the origin sits at 0. Returns a
    ``Bitstream``, or ``(Bitstream, EncodeTrace)`` when ``trace`` is set.
    """
    if not budget.feasible and not allow_infeasible:
        raise BudgetError(
            f"total coordinate error {budget.total_error:.6g} is not below gap/2 = {budget.threshold:.6g}"
        )
    p = instance.params
    if len(Y) != len(instance.points):
        raise CodecError(f"embedding has {len(Y)} points, instance has {len(instance.points)}")
    if abs(budget.gap - p.gap) > 1e-12:
        raise CodecError(f"budget gap {budget.gap} does not match the instance gap {p.gap}")
    if len(Y) > 1:
        report = check_jl_guarantee(instance.points, Y, max(budget.eps_f, ISOMETRY_TOL))
        if not report.passed:
            raise CodecError(
                f"embedding violates distortion {budget.eps_f}: ratios in "
                f"[{report.min_sq_ratio:.6g}, {report.max_sq_ratio:.6g}]"
            )
    Y = translate_to_origin(Y, 0)
    m = Y.dim
    fe = Y.points[1 : p.d + 1]
    fy = Y.points[p.d + 1 :]

    c2 = _ball_net(m, budget.eps_f, budget.eps_net, net_budget)
    try:
        idx2 = [locate(c2, x) for x in fe]
    except LocateError as exc:
        raise CodecError(f"an embedded basis vector left the ball: {exc}") from None
    A = _center_matrix(c2, idx2)
    T = _slice_from_A(A, budget)
    cinf_net = _slice_net(T, budget.eps_net, net_budget)

    V = fy @ A.T
    idxinf = []
    for ell, v in enumerate(V):
        c = T.basis.T @ v
        nrm = body_norm(T, c)
        if nrm > 1.0 + OUTER_SLACK:
            raise CodecError(
                f"A f(y_{ell + 1}) has norm {nrm:.6g} in the outer body; distortion budget exceeded"
            )
        try:
            idxinf.append(locate(cinf_net, c))
        except LocateError as exc:
            raise CodecError(f"y_{ell + 1}: {exc}") from None

    header = Header(p.n, p.d, p.Q, p.k, m, T.intrinsic_dim, budget.eps_f,
                    budget.eps_net, budget.gap, len(c2), len(cinf_net))
    writer = BitWriter()
    w2, winf = index_width(len(c2)), index_width(len(cinf_net))
    for i in idx2:
        writer.write(i, w2)
    for i in idxinf:
        writer.write(i, winf)
    stream = Bitstream(header.pack() + writer.getvalue())
    if not trace:
        return stream
    cinf = T.to_ambient(cinf_net.centers[idxinf]) if idxinf else np.zeros((0, p.d))
    return stream, EncodeTrace(A, V, cinf, len(c2), len(cinf_net), T.intrinsic_dim)


def classify(c: np.ndarray, threshold: float) -> SupportSet:
    """Coordinates (1-based) at or above the threshold."""
    return SupportSet(tuple(int(j) + 1 for j in np.flatnonzero(np.asarray(c) >= threshold)))


def decode(bits: Bitstream, *, net_budget: int = CODEC_NET_BUDGET) -> list[SupportSet]:
    """Recover the Q support sets from the stream alone."""
    data = bits.data if isinstance(bits, Bitstream) else bytes(bits)
    h = Header.unpack(data)
    if h.d < 1 or h.m < 1 or h.k < 1 or h.k > h.d:
        raise CodecError("malformed header")
    if len(data) * 8 != predict_bits(h.d, h.Q, h.c2_size, h.cinf_size):
        raise CodecError("stream length disagrees with its header")
    budget = plan_budget(h.eps_f, h.eps_net, h.gap, strict=False)

    c2 = _ball_net(h.m, h.eps_f, h.eps_net, net_budget)
    if len(c2) != h.c2_size:
        raise CodecError(f"rebuilt C2 has {len(c2)} centers, header says {h.c2_size}")
    reader = BitReader(data[HEADER.size :])
    w2, winf = index_width(h.c2_size), index_width(h.cinf_size)
    idx2 = [reader.read(w2) for _ in range(h.d)]
    if max(idx2) >= h.c2_size:
        raise CodecError("C2 index out of range")
    A = _center_matrix(c2, idx2)
    T = _slice_from_A(A, budget)
    if T.intrinsic_dim != h.w:
        raise CodecError(f"rebuilt subspace has dimension {T.intrinsic_dim}, header says {h.w}")
    cinf_net = _slice_net(T, h.eps_net, net_budget)
    if len(cinf_net) != h.cinf_size:
        raise CodecError(f"rebuilt C_inf has {len(cinf_net)} centers, header says {h.cinf_size}")

    supports = []
    for _ in range(h.Q):
        i = reader.read(winf)
        if i >= h.cinf_size:
            raise CodecError("C_inf index out of range")
        c = T.to_ambient(cinf_net.centers[i])
        supports.append(classify(c, budget.threshold))
    return supports


def closeips_bound_check(fhat_e, f_y, e, y, eps_f: float, eps_net: float) -> tuple[bool, float]:
    """Is <fhat_e, f_y> within 4 eps_f + 2 eps_net of <e, y>?

    Returns the verdict and the remaining slack (bound minus deviation).
    """
    dev = abs(float(np.dot(fhat_e, f_y)) - float(np.dot(e, y)))
    bound = 4.0 * eps_f + 2.0 * eps_net
    return dev <= bound + LEMMA_SLACK, bound - dev
