"""Command-line entry point ``subsysqec``."""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import builders as B
from .code import build_code
from .experiments import (
    ChainConfig,
    ExRecSpec,
    ResultRow,
    chain_R,
    estimate_failure,
    pseudo_threshold,
    write_csv,
)
from .noise import NoiseModel
from .verify import conversion_roundtrip_check, probe_pair, verify_single_fault_tolerance

BUILDERS = (
    "z_syndrome_extraction", "x_syndrome_extraction", "ec_round", "encode_logical",
    "convert_up", "convert_down", "transversal", "memory_exrec", "convert_up_exrec",
    "convert_down_exrec", "chain_circuit", "conversion_roundtrip",
)


def _alpha(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("alpha must be positive")
    return v


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=("auto", "ext", "numpy"), default="auto")
    p.add_argument("--no-timing", action="store_true",
                   help="write wall_ms as 0 so reruns are byte-identical")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="subsysqec", description=__doc__)
    parser.add_argument("--config", help="JSON file of option values; command-line flags win")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves: dict[tuple, argparse.ArgumentParser] = {}

    code = sub.add_parser("code", help="code structure").add_subparsers(dest="action", required=True)
    info = code.add_parser("info", help="generators, logicals and distances")
    info.add_argument("--n1", type=int, default=3)
    info.add_argument("--n2", type=int, default=3)
    leaves[("code", "info")] = info

    circ = sub.add_parser("circuit", help="circuit builders").add_subparsers(dest="action", required=True)
    dump = circ.add_parser("dump", help="print a built circuit")
    dump.add_argument("--name", choices=BUILDERS, required=True)
    dump.add_argument("--format", choices=("text", "json"), default="text")
    dump.add_argument("--n1", type=int, default=3)
    dump.add_argument("--n2", type=int, default=3)
    dump.add_argument("--index", type=int, default=1, help="column (Z extraction) or row (X extraction)")
    dump.add_argument("--rz", type=int, default=B.DEFAULT_REPS)
    dump.add_argument("--rx", type=int, default=B.DEFAULT_REPS)
    dump.add_argument("--basis", choices=("Z", "X"), default="Z")
    dump.add_argument("--probe", choices=("Z", "X"), default=None)
    dump.add_argument("--gate", choices=("X", "Z", "H", "CNOT"), default="X")
    dump.add_argument("--N", type=int, default=1)
    dump.add_argument("--variant", choices=("plain-3x3", "combined"), default="plain-3x3")
    leaves[("circuit", "dump")] = dump

    sim = sub.add_parser("sim", help="Monte Carlo runs").add_subparsers(dest="action", required=True)
    ex = sim.add_parser("exrec", help="ExRec failure rate")
    ex.add_argument("--kind", choices=("memory", "convert_up", "convert_down"), default="memory")
    ex.add_argument("--n1", type=int, default=3)
    ex.add_argument("--n2", type=int, default=3)
    ex.add_argument("--pz", type=float, required=True)
    rate = ex.add_mutually_exclusive_group()
    rate.add_argument("--alpha", type=_alpha, default=None, help="p_z / p_x (default 1)")
    rate.add_argument("--px", type=float, default=None, help="X rate, instead of --alpha")
    ex.add_argument("--trials", type=int, default=100_000)
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--rz", type=int, default=B.DEFAULT_REPS)
    ex.add_argument("--rx", type=int, default=B.DEFAULT_REPS)
    _add_common(ex)
    leaves[("sim", "exrec")] = ex

    th = sub.add_parser("threshold", help="memory pseudo-threshold for one error type")
    th.add_argument("--n1", type=int, default=3)
    th.add_argument("--n2", type=int, default=3)
    th.add_argument("--type", choices=("z", "x"), required=True)
    th.add_argument("--alpha", type=_alpha, default=1.0)
    th.add_argument("--seed", type=int, default=0)
    th.add_argument("--rz", type=int, default=B.DEFAULT_REPS)
    th.add_argument("--rx", type=int, default=B.DEFAULT_REPS)
    th.add_argument("--pmin", type=float, default=1e-7)
    th.add_argument("--pmax", type=float, default=1e-3)
    th.add_argument("--budget", type=int, default=4_000_000, help="injected-fault samples")
    _add_common(th)
    leaves[("threshold",)] = th

    ch = sub.add_parser("chain", help="memory chain: plain C(3,3) against converted C(5,3)")
    ch.add_argument("--alpha", type=_alpha, required=True)
    ch.add_argument("--pz", type=float, default=1e-4)
    ch.add_argument("--N", type=int, required=True)
    ch.add_argument("--trials", type=int, default=100_000)
    ch.add_argument("--seed", type=int, default=0)
    ch.add_argument("--variant", choices=("plain", "combined", "both"), default="both")
    ch.add_argument("--rz", type=int, default=B.DEFAULT_REPS)
    ch.add_argument("--rx", type=int, default=B.DEFAULT_REPS)
    _add_common(ch)
    leaves[("chain",)] = ch

    ver = sub.add_parser("verify", help="exhaustive checks").add_subparsers(dest="action", required=True)
    conv = ver.add_parser("conversion", help="single-fault check of a conversion ExRec")
    conv.add_argument("--direction", choices=("up", "down"), required=True)
    conv.add_argument("--gauge-seeds", type=int, default=3)
    conv.add_argument("--seed", type=int, default=0)
    leaves[("verify", "conversion")] = conv
    rt = ver.add_parser("roundtrip", help="noiseless encode, convert up, convert down")
    rt.add_argument("--trials", type=int, default=1000)
    rt.add_argument("--seed", type=int, default=0)
    leaves[("verify", "roundtrip")] = rt
    return parser, leaves


def parse_args(argv=None) -> argparse.Namespace:
    parser, leaves = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    cfg: dict = {}
    if known.config:
        with open(known.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            parser.error("--config must hold a JSON object")
        cfg = {k.lstrip("-").replace("-", "_"): v for k, v in cfg.items()}
        # file values become defaults, so explicit flags still win
        for leaf in leaves.values():
            dests = {a.dest: a for a in leaf._actions}
            hits = {k: v for k, v in cfg.items() if k in dests}
            for k in hits:
                dests[k].required = False
            leaf.set_defaults(**hits)
    args = parser.parse_args(argv)
    key = (args.command,) + ((args.action,) if hasattr(args, "action") else ())
    unknown = set(cfg) - {a.dest for a in leaves[key]._actions}
    if unknown:
        parser.error(f"config keys not accepted by '{' '.join(key)}': {', '.join(sorted(unknown))}")
    return args


def _emit(rows: list[ResultRow], args) -> None:
    text = write_csv(rows, timing=not args.no_timing)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_code_info(args) -> int:
    print(build_code(args.n1, args.n2).describe())
    return 0


def cmd_circuit_dump(args) -> int:
    code = build_code(args.n1, args.n2)
    name = args.name
    if name == "z_syndrome_extraction":
        c = B.z_syndrome_extraction(code, args.index, args.probe)
    elif name == "x_syndrome_extraction":
        c = B.x_syndrome_extraction(code, args.index, args.probe)
    elif name == "ec_round":
        c = B.ec_round(code, args.rz, args.rx, args.probe)
    elif name == "encode_logical":
        c = B.encode_logical(code, args.basis)
    elif name == "convert_up":
        c = B.convert_up(args.probe)
    elif name == "convert_down":
        c = B.convert_down(args.probe)
    elif name == "transversal":
        c = B.transversal(code, args.gate, args.probe)
    elif name == "memory_exrec":
        c = B.memory_exrec(code, args.rz, args.rx, args.probe or "X")
    elif name == "convert_up_exrec":
        c = B.convert_up_exrec(args.rz, args.rx, args.probe or "X")
    elif name == "convert_down_exrec":
        c = B.convert_down_exrec(args.rz, args.rx, args.probe or "X")
    elif name == "chain_circuit":
        c = B.chain_circuit(args.variant, args.N, args.rz, args.rx, args.probe or "X")
    else:
        c = B.conversion_roundtrip(args.probe or "Z")
    print(c.to_json() if args.format == "json" else c.to_text())
    return 0


def cmd_sim_exrec(args) -> int:
    spec = ExRecSpec(args.kind, args.n1, args.n2, args.rz, args.rx)
    if args.px is not None and args.alpha is not None:
        raise ValueError("give either --alpha or --px, not both")
    if args.px is not None:
        model = NoiseModel(args.pz, args.px)
    else:
        model = NoiseModel.from_alpha(args.pz, 1.0 if args.alpha is None else args.alpha)
    row = estimate_failure(spec, model, args.trials, args.seed, args.workers, args.backend,
                           experiment=f"exrec_{args.kind}")
    _emit([row], args)
    return 0


def cmd_threshold(args) -> int:
    res = pseudo_threshold(args.n1, args.n2, args.type, args.alpha, args.seed, (args.pmin, args.pmax),
                           args.rz, args.rx, budget=args.budget, backend=args.backend)
    if not res.crossing:
        print(f"no crossing: {res.message}", file=sys.stderr)
    p = res.p_star if res.crossing else math.nan
    other = (p / args.alpha) if args.type == "z" else (p * args.alpha)
    pz, px = (p, other) if args.type == "z" else (other, p)
    row = ResultRow(f"threshold_{args.type}", res.code, args.alpha, pz, px, "", args.rz, args.rx,
                    res.samples, args.seed, "", "", "", p, res.bracket[0] if res.crossing else math.nan,
                    res.bracket[1] if res.crossing else math.nan,
                    ExRecSpec("memory", args.n1, args.n2, args.rz, args.rx).build("X").noisy_location_count(),
                    0)
    _emit([row], args)
    return 0 if res.crossing else 3


def cmd_chain(args) -> int:
    variants = {"plain": ("plain-3x3",), "combined": ("combined",),
                "both": ("plain-3x3", "combined")}[args.variant]
    cfg = ChainConfig(args.alpha, args.pz, args.N, args.trials, args.seed, args.rz, args.rx, variants)
    res = chain_R(cfg, args.workers, args.backend)
    _emit(res.csv_rows(), args)
    if res.lower_bound_only:
        print("combined chain had no failures; R is a lower bound, add trials", file=sys.stderr)
    return 0


def cmd_verify_conversion(args) -> int:
    build = B.convert_up_exrec if args.direction == "up" else B.convert_down_exrec
    report = verify_single_fault_tolerance(probe_pair(build), args.gauge_seeds, seed=args.seed)
    print(report.summary())
    return 0 if report.ok else 1


def cmd_verify_roundtrip(args) -> int:
    report = conversion_roundtrip_check(args.trials, args.seed)
    print(report.summary())
    return 0 if report.ok else 1


COMMANDS = {
    ("code", "info"): cmd_code_info,
    ("circuit", "dump"): cmd_circuit_dump,
    ("sim", "exrec"): cmd_sim_exrec,
    ("threshold",): cmd_threshold,
    ("chain",): cmd_chain,
    ("verify", "conversion"): cmd_verify_conversion,
    ("verify", "roundtrip"): cmd_verify_roundtrip,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    key = (args.command,) + ((args.action,) if hasattr(args, "action") else ())
    try:
        return COMMANDS[key](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
