"""Command-line entry point.

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .codec import Bitstream, CodecError, decode, encode, plan_budget
from .embed import apply_embedding, djl_failure_rate, gaussian_projection, span_isometry
from .geometry import GeometryError, PointSequence, check_jl_guarantee
from .instance import (
    HardInstance,
    HardInstanceParams,
    InstanceError,
    SupportSet,
    build_instance,
    derive_params,
)
from .nets import NetError, audit_net, build_net
from .report import ConfigError, ExperimentConfig, make_body, dumps, run_experiment, welch_bound

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _emit(obj, out):
    text = dumps(obj)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_points(path) -> PointSequence:
    obj = _load_json(path)
    if "params" in obj and "points" in obj:
        obj = obj["points"]
    return PointSequence.from_json(obj)


def cmd_gen_instance(args):
    if args.d is not None:
        if args.k is None or args.Q is None:
            raise ConfigError("--d needs --k and --Q")
        params = HardInstanceParams.manual(args.d, args.k, args.Q, eps=args.eps or 0.1, c_k=args.ck)
    else:
        if args.n is None or args.eps is None:
            raise ConfigError("give --n and --eps, or --d --k --Q")
        params = derive_params(args.n, args.eps, args.ck)
    _emit(build_instance(params, seed=args.seed).to_json(), args.out)
    return EXIT_OK


def cmd_embed(args):
    X = _load_points(args.input)
    if args.kind == "isometry":
        Y = span_isometry(X)
    else:
        if args.m is None:
            raise ConfigError("--kind gaussian needs --m")
        Y = apply_embedding(gaussian_projection(X.dim, args.m, args.seed), X)
    _emit(Y.to_json(), args.out)
    return EXIT_OK


def _measured_distortion(X, Y) -> float:
    report = check_jl_guarantee(X, Y, 0.999999)
    return max(report.max_sq_ratio - 1.0, 1.0 - report.min_sq_ratio, 0.0)


def cmd_encode(args):
    inst = HardInstance.from_json(_load_json(args.instance))
    Y = _load_points(args.embedding)
    eps_f = args.eps_f if args.eps_f is not None else _measured_distortion(inst.points, Y)
    budget = plan_budget(eps_f, args.eps_net, inst.params.gap, strict=not args.allow_infeasible)
    stream = encode(inst, Y, budget, allow_infeasible=args.allow_infeasible)
    with open(args.out, "wb") as fh:
        fh.write(stream.data)
    return EXIT_OK


def cmd_decode(args):
    with open(args.input, "rb") as fh:
        supports = decode(Bitstream(fh.read()))
    _emit({"supports": [list(S.indices) for S in supports]}, args.out)
    return EXIT_OK


def cmd_verify(args):
    result = {}
    ok = True
    if args.x and args.y:
        if args.eps is None:
            raise ConfigError("--x/--y need --eps")
        rep = check_jl_guarantee(_load_points(args.x), _load_points(args.y), args.eps)
        result["guarantee"] = rep.to_json()
        ok &= rep.passed
    if args.instance and args.supports:
        inst = HardInstance.from_json(_load_json(args.instance))
        got = [SupportSet(tuple(s)) for s in _load_json(args.supports)["supports"]]
        match = got == list(inst.supports)
        result["supports_match"] = match
        ok &= match
    if not result:
        raise ConfigError("nothing to verify: give --x/--y/--eps and/or --instance/--supports")
    result["passed"] = bool(ok)
    _emit(result, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_welch(args):
    _emit({"n": args.n, "m": args.m, "k": args.k, "welch_bound": welch_bound(args.n, args.m, args.k)}, args.out)
    return EXIT_OK


def cmd_djl(args):
    u = None
    if args.u:
        u = np.asarray(json.loads(args.u), dtype=np.float64)
    est = djl_failure_rate(args.eps, args.d, args.m, args.trials, args.seed, u=u)
    _emit(est.to_json(), args.out)
    return EXIT_OK


def cmd_report(args):
    cfg = ExperimentConfig.from_json(_load_json(args.config))
    if args.out:
        cfg.output = None
    report = run_experiment(cfg)
    if args.out or not cfg.output:
        _emit(report, args.out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_net_audit(args):
    if args.body == "slice" and args.ambient is None:
        raise ConfigError("--body slice needs --ambient")
    spec = {"variant": "L2Ball" if args.body == "l2" else "SliceBody", "dim": args.dim,
            "radius": args.scale, "scale": args.scale, "ambient_dim": args.ambient, "seed": args.seed}
    body = make_body(spec)
    net = build_net(body, args.eps * body.scale)
    audit = audit_net(net, samples=args.samples, seed=args.seed)
    if args.centers:
        audit["net"] = net.to_json()
    _emit(audit, args.out)
    ok = audit["covering_ok"] and audit["separation_ok"] and audit["packing_ok"]
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=["json"], default="json")

    parser = argparse.ArgumentParser(prog="jlbound", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-instance", parents=[common], help="build a hard instance")
    p.add_argument("--n", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--ck", type=float, default=256.0)
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--Q", type=int)
    p.set_defaults(func=cmd_gen_instance)

    p = sub.add_parser("embed", parents=[common], help="embed a point sequence")
    p.add_argument("--kind", choices=["gaussian", "isometry"], required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--m", type=int)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("encode", parents=[common], help="encode an embedded instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--eps-net", type=float, required=True)
    p.add_argument("--eps-f", type=float, default=None,
                   help="embedding distortion (default: measured)")
    p.add_argument("--allow-infeasible", action="store_true")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="decode a bitstream")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("verify", parents=[common], help="check a JL guarantee or decoded supports")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--eps", type=float)
    p.add_argument("--instance")
    p.add_argument("--supports")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("welch", parents=[common], help="Welch coherence bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(func=cmd_welch)

    p = sub.add_parser("djl-estimate", parents=[common], help="Monte-Carlo DJL failure rate")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--u", help="test vector as a JSON list (default e_1)")
    p.set_defaults(func=cmd_djl)

    p = sub.add_parser("report", parents=[common], help="run an experiment config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("net-audit", parents=[common], help="build and audit one net")
    p.add_argument("--body", choices=["l2", "slice"], required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--ambient", type=int, default=None)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--eps", type=float, required=True, help="radius as a fraction of the scale")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--centers", action="store_true", help="include the center list")
    p.set_defaults(func=cmd_net_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, GeometryError, InstanceError, NetError, CodecError,
            OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"jlbound {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
