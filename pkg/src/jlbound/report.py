"""Welch bound, coherence and the experiment runner that ties the toolkit together."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .codec import decode, encode, plan_budget, predict_bits
from .embed import djl_dimension, djl_failure_rate, radial_scaling, span_isometry
from .geometry import GeometryError, PointSequence, check_jl_guarantee
from .instance import (
    HardInstanceParams,
    build_instance,
    derive_params,
    family_size,
    lower_bound_m,
)
from .nets import L2Ball, SliceBody, audit_net, build_net, orthonormalize_columns

UNIT_TOL = 1e-9
MODES = ("roundtrip", "djl_scan", "net_audit", "counting", "welch")


class ConfigError(ValueError):
    pass


def welch_bound(n: int, m: int, k: int = 1) -> float:
    """Lower bound on the coherence of n unit vectors in R^m (order-k Welch)."""
    if n < 2 or m < 1 or k < 1:
        raise ValueError("need n >= 2, m >= 1, k >= 1")
    inner = (n / math.comb(m + k - 1, k) - 1.0) / (n - 1)
    return max(0.0, inner) ** (1.0 / (2 * k))


def coherence(X: PointSequence) -> float:
    """Largest |<x_i, x_j>| over distinct positions i != j."""
    pts = X.points
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise GeometryError(f"point {bad} has norm {norms[bad]:.12g}, expected 1")
    if len(X) < 2:
        return 0.0
    G = np.abs(pts @ pts.T)
    np.fill_diagonal(G, -np.inf)
    return float(G.max())


def regular_simplex(m: int) -> PointSequence:
    """m + 1 unit vectors in R^m with pairwise inner product -1/m."""
    E = np.eye(m + 1) - 1.0 / (m + 1)
    E /= np.linalg.norm(E, axis=1, keepdims=True)
    basis = orthonormalize_columns(E.T).columns
    return PointSequence(m, E @ basis)


def random_unit_vectors(n: int, m: int, rng: np.random.Generator) -> PointSequence:
    G = rng.standard_normal((n, m))
    return PointSequence(m, G / np.linalg.norm(G, axis=1, keepdims=True))


def suggested_welch_order(n: int, eps: float) -> int:
    """k with 2k = ceil(lg n / lg(1/eps)), rounded up to a whole order."""
    return max(1, math.ceil(math.ceil(math.log2(n) / math.log2(1.0 / eps)) / 2))


@dataclass
class ExperimentConfig:
    mode: str
    parameters: dict = field(default_factory=dict)
    output: str | None = None

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict) or "mode" not in obj:
            raise ConfigError("config must be an object with a 'mode' key")
        cfg = cls(obj["mode"], dict(obj.get("parameters", {})), obj.get("output"))
        cfg.validate()
        return cfg

    def to_json(self) -> dict:
        return {"mode": self.mode, "parameters": self.parameters, "output": self.output}

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        p = self.parameters

        def positive_int(name, default=None, minimum=1):
            v = p.get(name, default)
            if v is None or not isinstance(v, int) or isinstance(v, bool) or v < minimum:
                raise ConfigError(f"{name} must be an integer >= {minimum}, got {v!r}")

        def unit_real(name, default=None, lo=0.0, hi=1.0):
            v = p.get(name, default)
            if not isinstance(v, (int, float)) or not lo < v < hi:
                raise ConfigError(f"{name} must lie in ({lo}, {hi}), got {v!r}")

        if self.mode == "roundtrip":
            positive_int("d", 4)
            positive_int("k", 1)
            positive_int("Q", 8, minimum=0)
            unit_real("eps_net", 0.15)
            ef = p.get("eps_f", 0.0)
            if not isinstance(ef, (int, float)) or not 0 <= ef < 1:
                raise ConfigError(f"eps_f must lie in [0, 1), got {ef!r}")
            if p.get("embedding", "isometry") not in ("isometry", "radial"):
                raise ConfigError("embedding must be 'isometry' or 'radial'")
            seeds = p.get("seeds", [0])
            if not isinstance(seeds, list) or not seeds:
                raise ConfigError("seeds must be a nonempty list")
        elif self.mode == "djl_scan":
            unit_real("eps", 0.25)
            unit_real("delta", 0.05)
            positive_int("d", 16)
            positive_int("trials", 10_000)
            ms = p.get("ms", [4, 16, 64, 256])
            if not isinstance(ms, list) or not all(isinstance(m, int) and m >= 1 for m in ms):
                raise ConfigError("ms must be a list of positive integers")
        elif self.mode == "net_audit":
            bodies = p.get("bodies")
            if not isinstance(bodies, list) or not bodies:
                raise ConfigError("net_audit needs a nonempty 'bodies' list")
        elif self.mode == "counting":
            if "n" in p:
                positive_int("n", minimum=2)
                unit_real("eps", hi=0.5)
            else:
                positive_int("d")
                positive_int("k")
                positive_int("Q", minimum=0)
        elif self.mode == "welch":
            positive_int("n", minimum=2)
            positive_int("m")
            positive_int("k", 1)


def _roundtrip(p: dict) -> tuple[dict, dict]:
    d, k, Q = p.get("d", 4), p.get("k", 1), p.get("Q", 8)
    eps_f, eps_net = float(p.get("eps_f", 0.0)), float(p.get("eps_net", 0.15))
    params = HardInstanceParams.manual(d=d, k=k, Q=Q)
    budget = plan_budget(eps_f, eps_net, params.gap, strict=False)
    runs = []
    for seed in p.get("seeds", [0]):
        inst = build_instance(params, seed=seed)
        Y = span_isometry(inst.points)
        if p.get("embedding", "isometry") == "radial":
            Y = radial_scaling(Y, eps_f, seed)
        guarantee = check_jl_guarantee(inst.points, Y, max(eps_f, 1e-9))
        stream, tr = encode(inst, Y, budget, trace=True, allow_infeasible=True)
        recovered = decode(stream)
        truth = np.array([[1.0 if j + 1 in S else 0.0 for j in range(d)] for S in inst.supports])
        coord_err = float(np.abs(tr.cinf - truth * params.gap).max()) if Q else 0.0
        predicted = predict_bits(d, Q, tr.c2_size, tr.cinf_size)
        m, w = Y.dim, tr.w
        runs.append({
            "seed": seed,
            "m": m,
            "w": w,
            "guarantee_passed": guarantee.passed,
            "recovered": [list(S.indices) for S in recovered],
            "supports": [list(S.indices) for S in inst.supports],
            "exact_recovery": list(recovered) == list(inst.supports),
            "bits_measured": stream.bit_length,
            "bits_predicted": predicted,
            "c2_size": tr.c2_size,
            "cinf_size": tr.cinf_size,
            "c2_volume_bound": (1 + 2 * (1 + eps_f) / eps_net) ** m,
            "cinf_existential_bound_45": 45.0 ** w,
            "cinf_packing_bound": (1 + 4 * budget.outer_scale / eps_net) ** w,
            "max_coordinate_error": coord_err,
            "volume_argument_bits": d * m * math.log2(1 + 4 / eps_net) + Q * m * math.log2(45),
        })
    verdicts = {
        "round_trip_identity": all(r["exact_recovery"] for r in runs),
        "bit_length_formula_exact": all(r["bits_measured"] == r["bits_predicted"] for r in runs),
        "embedding_guarantee": all(r["guarantee_passed"] for r in runs),
        "coordinate_error_within_budget": all(
            r["max_coordinate_error"] <= budget.total_error + 1e-9 for r in runs
        ),
    }
    return {"budget": budget.to_json(), "runs": runs}, verdicts


def _djl_scan(p: dict) -> tuple[dict, dict]:
    eps, delta = float(p.get("eps", 0.25)), float(p.get("delta", 0.05))
    d, trials, seed = p.get("d", 16), p.get("trials", 10_000), p.get("seed", 0)
    ms = p.get("ms", [4, 16, 64, 256])
    m_star = djl_dimension(eps, delta)
    target = djl_failure_rate(eps, d, m_star, trials, seed)
    scan = [djl_failure_rate(eps, d, m, trials, seed + 1 + i) for i, m in enumerate(ms)]
    monotone = all(
        b.delta_hat <= a.delta_hat + 2.0 * math.hypot(a.std_error, b.std_error)
        for a, b in zip(scan, scan[1:])
    )
    return (
        {"m_star": m_star, "at_m_star": target.to_json(), "scan": [e.to_json() for e in scan]},
        {"failure_below_delta": target.delta_hat < delta, "non_increasing_in_m": monotone},
    )


def make_body(spec: dict):
    if spec["variant"] == "L2Ball":
        return L2Ball(int(spec["dim"]), float(spec.get("radius", 1.0)))
    if spec["variant"] == "SliceBody":
        d, w = int(spec["ambient_dim"]), int(spec["dim"])
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(spec.get("seed", 0)), 0])))
        basis = orthonormalize_columns(rng.standard_normal((d, w))).columns
        return SliceBody(basis, float(spec.get("scale", 1.0)))
    raise ConfigError(f"unknown body variant {spec.get('variant')!r}")


def _net_audit(p: dict) -> tuple[dict, dict]:
    out = []
    verdicts = {}
    for i, spec in enumerate(p["bodies"]):
        body = make_body(spec)
        eps = float(spec["eps"]) * body.scale
        net = build_net(body, eps)
        again = build_net(body, eps, workers=2)
        audit = audit_net(net, samples=int(p.get("samples", 10_000)), seed=int(p.get("seed", 0)))
        audit["deterministic"] = bool(np.array_equal(net.centers, again.centers))
        audit["body"] = spec
        out.append(audit)
        for name in ("covering_ok", "separation_ok", "packing_ok", "deterministic", "centers_in_body"):
            verdicts[f"body{i}_{name}"] = bool(audit[name])
    return {"audits": out}, verdicts


def _counting(p: dict) -> tuple[dict, dict]:
    result: dict[str, Any] = {}
    if "n" in p:
        params = derive_params(p["n"], float(p["eps"]), float(p.get("c_k", 256.0)))
        d, k, Q = params.d, params.k, params.Q
        result["params"] = params.to_json()
        result["lower_bound_m"] = lower_bound_m(params.n, params.eps)
    else:
        d, k, Q = p["d"], p["k"], p["Q"]
    fam = family_size(d, k, Q)
    result.update(
        d=d, k=k, Q=Q,
        family_size=str(fam["size"]),
        log2_family_size=fam["log2_size"],
        log2_chain_floor=fam["log2_floor"],
        chain_holds=fam["chain_holds"],
    )
    if k >= 1 and d >= 2 * k:
        # the injectivity argument needs bits >= log2 |family|; kQ lg(d/2k) <= n m
        result["min_m_for_injective_encoding"] = fam["log2_floor"] / max(1, d + Q + 1)
    return result, {"chain_holds": fam["chain_holds"]}


def _welch(p: dict) -> tuple[dict, dict]:
    n, m, k = p["n"], p["m"], p.get("k", 1)
    bound = welch_bound(n, m, k)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(p.get("seed", 0)), 0])))
    trials = int(p.get("trials", 100))
    worst = min(coherence(random_unit_vectors(n, m, rng)) for _ in range(trials))
    result = {"n": n, "m": m, "k": k, "welch_bound": bound, "min_random_coherence": worst}
    verdicts = {"random_sets_respect_bound": worst >= welch_bound(n, m, 1) - 1e-9}
    if "eps" in p:
        kk = suggested_welch_order(n, float(p["eps"]))
        result["suggested_order"] = kk
        result["welch_bound_suggested_order"] = welch_bound(n, m, kk)
    if n == m + 1:
        simplex = coherence(regular_simplex(m))
        result["simplex_coherence"] = simplex
        verdicts["simplex_equality"] = abs(simplex - welch_bound(n, m, 1)) <= 1e-9
    return result, verdicts


_RUNNERS = {
    "roundtrip": _roundtrip,
    "djl_scan": _djl_scan,
    "net_audit": _net_audit,
    "counting": _counting,
    "welch": _welch,
}


def run_experiment(config: ExperimentConfig) -> dict:
    """Run one configured pipeline and return its report (and write it if asked)."""
    config.validate()
    start = time.perf_counter()
    results, verdicts = _RUNNERS[config.mode](config.parameters)
    report = {
        "toolkit": "jlbound",
        "version": __version__,
        "config": config.to_json(),
        "results": results,
        "verdicts": verdicts,
        "passed": all(verdicts.values()),
        "timings": {"wall_seconds": time.perf_counter() - start},
    }
    if config.output:
        with open(config.output, "w") as fh:
            fh.write(dumps(report))
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def without_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}
