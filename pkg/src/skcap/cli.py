"""Command-line frontend: ``skcap <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dbbound, fracpart, keybound, lambda_mi, macregion, props
from .dist import SizeError, channel_from_json, dist_from_json, load_json

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

SCHEMAS = """\
file formats (JSON; any input may also be given as preset:NAME for bundled files):
  distribution  {"vars": [{"name": str, "card": int}, ...], "probs": nested arrays, row-major}
  channel       {"in_vars": [...], "out_vars": [...], "probs": nested arrays, inputs then outputs}
  lambda        {"k": int, "weights": [{"subset": [1-based ints], "w": float}, ...]}
                or a preset: uniform-km1, partition:1,2|3
  code          {"k", "n", "w_cards": [...], "w_probs"?: [[...]], "encoders": {"i,j": flat table},
                 "schedule": [channel index per step], "channels": [channel, ...]}
                 table (i,j) is indexed row-major by (w_i, y_i1, ..., y_i(j-1))
  system        {"k", "r", "main": channel, "parallels": [{"channel": channel, "alpha": float}, ...]}
                 channels map X1..Xk to (Y1..Yk, Z)
  aux receiver  channel from (X1..Xk, Y1..Yk, Z) to T
  mac           channel from (X1, X2) to outputs named Y, YF1, YF2

bundled presets: """

EXIT_TEXT = "exit status: 0 success, 2 invalid input, 3 numerical failure"


class InputError(Exception):
    pass


def _preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in props.preset_path("x").parent.iterdir() if p.name.endswith(".json"))


def _read(spec: str, what: str) -> dict:
    if spec.startswith("preset:"):
        name = spec[len("preset:"):]
        path = props.preset_path(name)
        if not path.is_file():
            raise InputError(f"{what}: no bundled preset {name!r} (have {', '.join(_preset_names())})")
    else:
        path = Path(spec)
        if not path.is_file():
            raise InputError(f"{what}: cannot read {spec!r}")
    try:
        return load_json(path)
    except json.JSONDecodeError as e:
        raise InputError(f"{what} {spec}: line {e.lineno} column {e.colno}: {e.msg}") from None


def _wrap(what: str, fn, doc):
    try:
        return fn(doc)
    except (ValueError, KeyError, TypeError, IndexError) as e:
        raise InputError(f"{what}: {e}") from None


def _lambda(spec: str | None, k: int) -> fracpart.FractionalPartition:
    if spec is None:
        spec = "uniform-km1"
    if spec == "uniform-km1" or spec.startswith("partition:"):
        fp = _wrap("--lambda", lambda s: fracpart.parse_preset(s, k), spec)
    else:
        fp = _wrap("lambda file", fracpart.fp_from_json, _read(spec, "lambda file"))
    if fp.k != k:
        raise InputError(f"--lambda: weights are for k={fp.k}, input has k={k}")
    problems = fracpart.validate(fp)
    if problems:
        raise InputError("--lambda: " + "; ".join(problems))
    return fp


def _groups(d, groups: str | None, cond: str | None):
    cond_names = tuple(c for c in (cond or "").split(",") if c)
    if groups:
        gs = [tuple(n for n in blk.split(",") if n) for blk in groups.split("|")]
    else:
        gs = [(n,) for n in d.names if n not in cond_names]
    if len(gs) < 2:
        raise InputError("need at least two terminals")
    return gs, cond_names


def _config(args) -> keybound.OptimizerConfig:
    try:
        return keybound.OptimizerConfig(
            restarts=args.restarts, master_seed=args.seed,
            tol=args.tol if args.tol is not None else 1e-7,
            grid_res=args.grid, card_u=args.aux_card_u, card_v=args.aux_card_v)
    except ValueError as e:
        raise InputError(str(e)) from None


def _aux(args):
    if args.t_receiver in (None, "z"):
        return "z"
    return _wrap("--t-receiver", channel_from_json, _read(args.t_receiver, "--t-receiver"))


def _check_tol(args) -> float:
    return args.tol if args.tol is not None else 1e-9


def _finite(*vals):
    if not all(math.isfinite(v) for v in vals):
        raise FloatingPointError("non-finite result")


# ---------------------------------------------------------------- subcommands

def cmd_ilambda(args):
    d = _wrap("distribution", dist_from_json, _read(args.dist, "distribution"))
    gs, cond = _groups(d, args.groups, args.cond)
    fp = _lambda(args.lambda_, len(gs))
    val = _wrap("ilambda", lambda _: lambda_mi.i_lambda(d, gs, fp, cond), None)
    _finite(val)
    text = f"I_lambda = {val:.6f} bits"
    doc = {"value": val, "k": len(gs), "groups": [list(g) for g in gs], "cond": list(cond),
           "lambda": fracpart.fp_to_json(fp)}
    csv = f"value\n{val!r}\n"
    return text, doc, csv


def cmd_tightest(args):
    d = _wrap("distribution", dist_from_json, _read(args.dist, "distribution"))
    gs, cond = _groups(d, args.groups, args.cond)
    k = len(gs)
    # I_lambda = H(X|C) - sum_B lambda_B H(X_B | X_Bc, C), linear in lambda
    full = tuple(n for g in gs for n in g) + cond
    h_all = d.entropy(full)
    coef = {}
    for m in fracpart.proper_masks(k):
        rest = tuple(n for i in range(1, k + 1) if not m >> (i - 1) & 1 for n in gs[i - 1]) + cond
        coef[m] = -(h_all - d.entropy(rest))
    base = h_all - (d.entropy(cond) if cond else 0.0)
    fp, lin = _wrap("tightest-lambda", lambda _: fracpart.optimize_linear(k, coef, "min", r=args.r), None)
    val = base + lin
    _finite(val)
    lines = [f"min I_lambda = {val:.6f} bits", "lambda:"]
    lines += [f"  {{{','.join(map(str, fracpart.members(m)))}}}: {w:.6f}" for m, w in fp.items()]
    doc = {"value": val, "k": k, "r": args.r, "lambda": fracpart.fp_to_json(fp)}
    csv = "subset,w\n" + "".join(f"\"{' '.join(map(str, fracpart.members(m)))}\",{w!r}\n" for m, w in fp.items())
    return "\n".join(lines), doc, csv


def cmd_dbcheck(args):
    code, channels = _wrap("code file", dbbound.code_from_json, _read(args.code, "code file"))
    if not channels:
        raise InputError("code file: no channels given")
    aux = None if args.t_receiver in (None, "z") else _aux(args)
    fp = _lambda(args.lambda_, code.k)
    trace = _wrap("simulation", lambda _: dbbound.simulate_code(code, channels, aux), None)
    tol = _check_tol(args)
    rows = []
    for cname in ("Z", "T") if aux is not None else ("Z",):
        lhs, rhs = dbbound.dependence_balance_sides(trace, fp, cname)
        _finite(lhs, rhs)
        rows.append({"cond": cname, "lhs": lhs, "rhs": rhs, "holds": lhs <= rhs + tol})
    lines = [f"{'cond':<6}{'lhs':>12}{'rhs':>12}  holds"]
    lines += [f"{r['cond']:<6}{r['lhs']:>12.6f}{r['rhs']:>12.6f}  {r['holds']}" for r in rows]
    csv = "cond,lhs,rhs,holds\n" + "".join(f"{r['cond']},{r['lhs']!r},{r['rhs']!r},{r['holds']}\n" for r in rows)
    return "\n".join(lines), {"k": code.k, "n": code.n, "rows": rows}, csv


def cmd_keybound(args):
    sys_ = _wrap("system file", keybound.system_from_json, _read(args.system, "system file"))
    fp = _lambda(args.lambda_, sys_.k)
    if not fracpart.admissible_for_keyset(fp, sys_.r):
        raise InputError(f"--lambda: weight on a subset containing the key set 1..{sys_.r}")
    aux = _aux(args)
    cfg = _config(args)
    rep = _wrap("keybound", lambda _: keybound.key_capacity_bound(sys_, aux, fp, cfg), None)
    _finite(rep.value, *(cb.value for cb in rep.per_channel))
    for cb in rep.per_channel:
        if not cb.converged:
            name = "main" if cb.channel_id == 0 else f"parallel{cb.channel_id}"
            print(f"warning: optimizer hit the iteration cap on {name}", file=sys.stderr)
    csv = "channel,alpha,V\n" + "".join(
        f"{'main' if cb.channel_id == 0 else f'parallel{cb.channel_id}'},{cb.alpha!r},{cb.value!r}\n"
        for cb in rep.per_channel)
    return rep.table(), rep.to_json(), csv


def cmd_macregion(args):
    mac = _wrap("mac file", macregion.mac_from_json, _read(args.mac, "mac file"))
    cfg = _config(args)
    reg = _wrap("macregion", lambda _: macregion.outer_region(mac, cfg, drop_6b=args.drop_6b), None)
    _finite(reg.sum_rate_max, *(c for v in reg.vertices for c in v))
    lines = [f"{'R1':>10}{'R2':>10}"] + [f"{a:>10.6f}{b:>10.6f}" for a, b in reg.vertices]
    tag = "without 6b" if args.drop_6b else "all constraints"
    lines.append(f"sum-rate bound = {reg.sum_rate_max:.6f} bits ({tag}, uncertified)")
    return "\n".join(lines), reg.to_json(), reg.csv()


def cmd_props(args):
    checks = props.run_all(args.seed, quick=args.quick, include_slow=not args.skip_slow)
    lines = [c.line() for c in checks]
    failed = [c.name for c in checks if not c.passed]
    lines.append(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    doc = {"seed": args.seed, "checks": [{"name": c.name, "passed": c.passed, "count": c.count,
                                          "worst": c.worst, "detail": c.detail} for c in checks]}
    csv = "name,passed,count,worst\n" + "".join(f"{c.name},{c.passed},{c.count},{c.worst!r}\n" for c in checks)
    return "\n".join(lines), doc, csv, (1 if failed else 0)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--tol", type=float, default=None,
                   help="optimizer stopping tolerance (default 1e-7) or check tolerance (default 1e-9)")
    g.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    g.add_argument("--restarts", type=int, default=4, help="random restarts per optimization (default 4)")
    g.add_argument("--grid", type=int, default=None, metavar="RES",
                   help="grid mode: scan inputs on a simplex grid of step 1/(RES-1)")
    g.add_argument("--aux-card-u", type=int, default=None, help="|U| (default |X|+1)")
    g.add_argument("--aux-card-v", type=int, default=None, help="|V| (default |X|+1)")
    g.add_argument("--t-receiver", default=None, metavar="z|FILE",
                   help="auxiliary receiver: z (T = Z) or a channel file")
    g.add_argument("--lambda", dest="lambda_", default=None, metavar="SPEC",
                   help="uniform-km1, partition:1,2|3, or a lambda file (default uniform-km1)")
    g.add_argument("--csv", default=None, metavar="PATH", help="also write a CSV report")
    g.add_argument("--json", default=None, metavar="PATH", help="also write a JSON report")
    g.add_argument("--drop-6b", action="store_true", help="macregion: drop the second dependence constraint")

    p = argparse.ArgumentParser(
        prog="skcap", formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Lambda-mutual information, secret-key upper bounds and dependence-balance MAC regions.",
        epilog=SCHEMAS + ", ".join(_preset_names()) + "\n\n" + EXIT_TEXT)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("ilambda", cmd_ilambda, "evaluate I_lambda of a distribution")
    sp.add_argument("dist")
    sp.add_argument("--groups", help="terminal groups, e.g. 'A,B|C' (default: one per variable)")
    sp.add_argument("--cond", help="comma-separated conditioning variables")
    sp = add("tightest-lambda", cmd_tightest, "fractional partition minimizing I_lambda of a distribution")
    sp.add_argument("dist")
    sp.add_argument("--groups")
    sp.add_argument("--cond")
    sp.add_argument("--r", type=int, default=None, help="restrict to partitions admissible for key set 1..r")
    sp = add("dbcheck", cmd_dbcheck, "both sides of the dependence-balance inequality for a code")
    sp.add_argument("code")
    sp = add("keybound", cmd_keybound, "secret-key upper bound for a wiretap multi-way system")
    sp.add_argument("system")
    sp = add("macregion", cmd_macregion, "dependence-balance outer region of a feedback MAC")
    sp.add_argument("mac")
    sp = add("props", cmd_props, "run the randomized property suite; exit 1 on any violation")
    sp.add_argument("--quick", action="store_true", help="smaller instance counts")
    sp.add_argument("--skip-slow", action="store_true", help="skip optimizer and MAC checks")
    return p


def _write(path, text):
    Path(path).write_text(text if text.endswith("\n") else text + "\n")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    try:
        out = args.func(args)
        text, doc, csv = out[:3]
        code = out[3] if len(out) > 3 else EXIT_OK
    except (InputError, SizeError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (FloatingPointError, OverflowError, RuntimeError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    print(text)
    if args.json:
        _write(args.json, json.dumps(doc, indent=2, sort_keys=True))
    if args.csv:
        _write(args.csv, csv)
    return code


def main():
    sys.exit(run())
