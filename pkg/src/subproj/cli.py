"""Command-line front end: subproj <command> [flags]."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .core import Chain, load_function, permutahedron, validate_submodular
from .divergence import DomainError
from .fw import ALL_TOOLS, SolverOptions, a2fw_project, afw_project
from .geometry import BallSpec, mc_same_face, mc_vertex_fraction
from .linopt import edmonds_greedy, face_greedy
from .online import generate_losses, ofw_fpl_run, omd_run
from .pav import pav_project
from .toolkit import RoundingError, infer_from_iterate, infer_from_previous


def _point(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")], dtype=float)


def _chain_arg(text: str) -> Chain:
    data = json.loads(text)
    return Chain([frozenset(S) for S in data])


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_csv(rows, header, out=None):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args) -> int:
    oracle = load_function(args.fn, check=False)
    report = validate_submodular(oracle)
    _emit({
        "ok": report.ok,
        "zero_at_empty": report.zero_at_empty,
        "monotone_witness": [sorted(S) for S in report.monotone_witness] if report.monotone_witness else None,
        "submodular_witness": [sorted(S) for S in report.submodular_witness] if report.submodular_witness else None,
        "message": report.message,
    })
    return 0 if report.ok else 1


def cmd_lo(args) -> int:
    f = load_function(args.fn)
    c = _point(args.cost)
    if args.chain:
        x = face_greedy(f, c, _chain_arg(args.chain), args.sense)
    else:
        x, _ = edmonds_greedy(f, c, args.sense)
    _emit({"x": [float(v) for v in x], "value": float(c @ x)})
    return 0


def cmd_project(args) -> int:
    f = load_function(args.fn)
    y = _point(args.y)
    trace = [] if args.trace else None
    if args.alg == "pav":
        res = pav_project(f, args.map, y)
    else:
        opts = SolverOptions(eps=args.eps,
                             tools=frozenset(args.tools.split(",")) if args.tools else ALL_TOOLS)
        if args.alg == "afw":
            res = afw_project(f, args.map, y, opts, trace=trace)
        else:
            warm = _chain_arg(args.warm_chain) if args.warm_chain else None
            res = a2fw_project(f, args.map, y, warm_chain=warm, opts=opts, trace=trace)
    if args.trace:
        _write_csv(
            ([t["iter"], float(t["gap"]), t["step"], t["active_size"]] for t in trace),
            ["iter", "gap", "step", "active_size"], args.trace)
    _emit(res.to_json())
    return 0


def cmd_infer(args) -> int:
    x = _point(args.x)
    y = _point(args.y)
    if args.mode == "t1":
        inferred = infer_from_previous(x, y, eps=args.eps, L=args.L, mp=args.map)
    else:
        from .divergence import get_map
        mp = get_map(args.map)
        inferred = infer_from_iterate(mp.grad(x) - mp.grad(y), eps=args.eps, L=args.L)
    _emit({
        "chain": inferred.chain.to_json(),
        "witnesses": [{"set": sorted(S), "gap": float(g)} for S, g in inferred.witnesses],
    })
    return 0


def cmd_mc_vertices(args) -> int:
    f = load_function(args.fn)
    center = _point(args.center) if args.center else np.zeros(f.n)
    rows = []
    for R in (float(r) for r in args.radii.split(",")):
        est = mc_vertex_fraction(f, BallSpec(center, R), args.N, args.seed,
                                 projector=args.projector)
        rows.append([float(R), est.estimate, est.stderr, est.N])
    _write_csv(rows, ["R", "estimate", "stderr", "N"], args.out)
    return 0


def cmd_mc_perturb(args) -> int:
    f = load_function(args.fn)
    center = _point(args.center) if args.center else np.zeros(f.n)
    rows = []
    for R in (float(r) for r in args.radii.split(",")):
        est = mc_same_face(f, BallSpec(center, R), args.eps, args.N, args.seed,
                           projector=args.projector, perturbation=args.dist)
        rows.append([float(R), est.estimate, est.stderr, est.N])
    _write_csv(rows, ["R", "estimate", "stderr", "N"], args.out)
    return 0


def cmd_losses(args) -> int:
    stream = generate_losses(args.n, args.T, args.a, args.b, args.seed)
    rows = ([t] + [float(v) for v in stream.costs[t]] for t in range(args.T))
    _write_csv(rows, ["t"] + [f"c{i}" for i in range(args.n)], args.out)
    return 0


def cmd_bench_omd(args) -> int:
    f = load_function(args.fn)
    tools = frozenset(args.tools.split(",")) if args.tools else ALL_TOOLS
    opts = SolverOptions(eps=args.eps, tools=tools)
    rows = []
    for seed in range(args.seeds):
        stream = generate_losses(f.n, args.T, args.a, args.b, seed=args.seed + seed)
        if args.projector == "fpl":
            tr = ofw_fpl_run(f, stream, seed=args.seed + seed)
        else:
            tr = omd_run(f, args.map, stream, eta=args.eta,
                         projector=args.projector, opts=opts)
        for t in range(stream.T):
            rows.append([args.seed + seed, t, float(tr.losses[t]),
                         float(tr.cum_regret[t]), int(tr.proj_iters[t]),
                         float(tr.proj_time[t] * 1e3)])
    _write_csv(rows, ["seed", "round", "loss", "cum_regret", "proj_iters", "proj_ms"],
               args.out)
    return 0


def cmd_recover_experiment(args) -> int:
    """Project a cloud of nearby Gaussian points; track how many tight sets
    were already seen at earlier points and how many T1 infers in advance."""
    from .geometry import substream

    f = permutahedron(args.n)
    rng = substream(args.seed, "recover")
    base = rng.normal(0.0, args.n, args.n)
    prev_y = base
    prev_res = pav_project(f, "euclid", base)
    seen = set(prev_res.chain.sets)
    rows = []
    tot_tight = tot_seen = tot_inferred = 0
    scale = 1.0 + abs(f.value(range(f.n)))
    for k in range(1, args.m + 1):
        y = base + rng.normal(0.0, args.sigma, args.n)
        res = pav_project(f, "euclid", y)
        tight = set(res.chain.sets)
        move = float(np.linalg.norm(y - prev_y))
        inferred = set()
        if move > 0:
            inferred = set(infer_from_previous(prev_res.x, prev_y, y, eps=move).chain.sets)
        for S in inferred:
            if abs(float(np.sum(res.x[sorted(S)])) - f.value(S)) > 1e-8 * scale:
                raise RuntimeError(f"inferred set {sorted(S)} not tight at point {k}")
        tot_tight += len(tight)
        tot_seen += len(tight & seen)
        tot_inferred += len(inferred & tight)
        rows.append([k, tot_seen / tot_tight, tot_inferred / tot_tight])
        seen |= tight
        prev_y, prev_res = y, res
    _write_csv(rows, ["k", "frac_seen", "frac_inferred"], args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subproj",
                                description="Projections onto submodular base polytopes")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="check a function spec file")
    sp.add_argument("--fn", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("lo", help="linear optimization over B(f) or a face")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--cost", required=True)
    sp.add_argument("--chain", default=None)
    sp.add_argument("--sense", choices=["max", "min"], default="max")
    sp.set_defaults(func=cmd_lo)

    sp = sub.add_parser("project", help="project a point onto B(f)")
    sp.add_argument("--alg", choices=["pav", "afw", "a2fw"], required=True)
    sp.add_argument("--fn", required=True)
    sp.add_argument("--map", choices=["euclid", "kl", "is", "logistic"], default="euclid")
    sp.add_argument("--y", required=True)
    sp.add_argument("--warm-chain", default=None)
    sp.add_argument("--eps", type=float, default=1e-7)
    sp.add_argument("--tools", default=None)
    sp.add_argument("--trace", default=None)
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("infer", help="infer tight sets (T1/T2)")
    sp.add_argument("--mode", choices=["t1", "t2"], required=True)
    sp.add_argument("--x", required=True, help="projection (t1) or iterate (t2)")
    sp.add_argument("--y", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--L", type=float, default=1.0)
    sp.add_argument("--map", choices=["euclid", "kl", "is", "logistic"], default="euclid")
    sp.set_defaults(func=cmd_infer)

    sp = sub.add_parser("mc-vertices", help="vertex-projection fraction estimate")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--center", default=None)
    sp.add_argument("--radii", default="10,100,1000")
    sp.add_argument("--N", type=int, default=20000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--projector", choices=["pav", "a2fw"], default="pav")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_mc_vertices)

    sp = sub.add_parser("mc-perturb", help="same-minimal-face fraction estimate")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--center", default=None)
    sp.add_argument("--radii", default="10,100,1000")
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--N", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--projector", choices=["pav", "a2fw"], default="pav")
    sp.add_argument("--dist", choices=["ball", "gaussian"], default="ball")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_mc_perturb)

    sp = sub.add_parser("losses", help="materialize a loss stream")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--T", type=int, required=True)
    sp.add_argument("--a", type=int, default=1)
    sp.add_argument("--b", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_losses)

    sp = sub.add_parser("bench-omd", help="online mirror descent / FPL benchmark")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--T", type=int, default=500)
    sp.add_argument("--a", type=int, default=1)
    sp.add_argument("--b", type=int, default=0)
    sp.add_argument("--seeds", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--projector", choices=["pav", "afw", "a2fw", "fpl"], default="pav")
    sp.add_argument("--map", choices=["euclid", "kl", "is", "logistic"], default="euclid")
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--eps", type=float, default=1e-7)
    sp.add_argument("--tools", default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_bench_omd)

    sp = sub.add_parser("recover-experiment", help="tight-set recovery experiment")
    sp.add_argument("--n", type=int, default=20)
    sp.add_argument("--m", type=int, default=200)
    sp.add_argument("--sigma", type=float, default=0.02)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_recover_experiment)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, DomainError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RoundingError, RuntimeError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
