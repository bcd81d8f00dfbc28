"""Command-line front end.

Each command writes ``<command>.json`` (and ``<command>.csv`` for numeric
series) into ``--out``.  Exit codes: 0 success, 2 verdict false, 3 the
outcome is only a truncation, 1 error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .ball import CayleyBall, build_ball
from .electrics import coarse_embedding_report, double_electrification_check, electrify
from .errors import GGLabError
from .graded import graded_verdict, roundtrip_theorem_check
from .height import algebraic_height, geometric_height
from .metric import MetricGraph, delta_hyperbolicity, fmt
from .paths import MeetingParams, detect_meetings
from .presentation import Presentation
from .space import GroupSpace
from .subgroups import coset_pieces, load_subgroup, orbit_points

log = logging.getLogger("gglab")

OK, ERROR, FALSE, TRUNCATED = 0, 1, 2, 3


def _default(o):
    if isinstance(o, Fraction):
        return fmt(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (np.ndarray, set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _write(args, obj: dict, rows: list[list] | None = None, header: list[str] | None = None) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.command}.json"
    path.write_text(json.dumps(obj, sort_keys=True, indent=1, default=_default) + "\n")
    log.info("wrote %s", path)
    if rows is not None:
        # header comment carries the units of every column
        lines = ["# " + ", ".join(header), ",".join(h.split(" [")[0] for h in header)]
        lines += [",".join(str(x) for x in r) for r in rows]
        (out / f"{args.command}.csv").write_text("\n".join(lines) + "\n")


def _presentation(args) -> Presentation:
    if not args.presentation:
        raise GGLabError("--presentation is required")
    p = Presentation.load(args.presentation)
    if getattr(args, "electrify", None):
        p = Presentation(p.alphabet, p.relators, p.strategy, tuple(args.electrify), p.name)
    return p


def _space(args) -> GroupSpace:
    p = _presentation(args)
    return GroupSpace.build(p, args.radius)


def _subgroups(args, p: Presentation) -> list:
    if not args.subgroup:
        raise GGLabError("--subgroup is required")
    return [load_subgroup(s, p) for s in args.subgroup]


# ---------------------------------------------------------------------------
# commands


def cmd_ball(args) -> int:
    ball = build_ball(_presentation(args), args.radius)
    obj = ball.to_json()
    rows = [[r, int((ball.lengths == r).sum())] for r in range(ball.radius + 1)]
    _write(args, obj, rows, ["radius [word length]", "sphere [vertices]"])
    return OK


def cmd_delta(args) -> int:
    if args.graph:
        obj = json.loads(Path(args.graph).read_text())
        # a ball artifact labels edges by generator; any other graph carries lengths
        g = CayleyBall.from_json(obj).graph if "presentation" in obj else MetricGraph.from_json(obj)
    else:
        g = _space(args).graph
    mode = "exact" if args.exact or not args.sample else "sampled"
    rep = delta_hyperbolicity(g, mode, sample=args.sample or 64, seed=args.seed)
    _write(args, rep.to_json())
    return OK if not rep.lower_bound else TRUNCATED


def cmd_electrify(args) -> int:
    space = _space(args)
    h = _subgroups(args, space.presentation)[0]
    fam = coset_pieces(h, space.ball)
    cs = electrify(space.graph, fam)
    B = Fraction(args.bound) if args.bound is not None else Fraction(2 * space.safe_radius, 10)
    win = space.window(max(1, space.safe_radius // 2))
    rep = coarse_embedding_report(space.graph, cs, within=win, bounded_threshold=B, seed=args.seed,
                                  delta_sample=args.sample or 48)
    obj = {"graph": cs.to_json(), "report": rep.to_json()}
    rows = [[r, fmt(v), rep.psi.counts[r]] for r, v in rep.psi.values.items()]
    _write(args, obj, rows, ["r [distance in d, floor]", "psi [angular distance]", "pairs [count]"])
    return OK if rep.proper else FALSE


def cmd_horoball(args) -> int:
    space = _space(args)
    h = _subgroups(args, space.presentation)[0]
    fam = coset_pieces(h, space.ball)
    rep = double_electrification_check(space.graph, fam, K=args.depth, n=args.sample or 200, seed=args.seed)
    obj = rep.to_json()
    obj["R"] = space.radius
    _write(args, obj, [[space.radius, args.depth, fmt(rep.lam)]],
           ["R [word length]", "K [horoball depth]", "lambda_hat [multiplicative and additive constant]"])
    return OK if rep.identity_ok else FALSE


def cmd_height(args) -> int:
    p = _presentation(args)
    hs = _subgroups(args, p)
    if args.mode == "algebraic":
        rep = algebraic_height(hs, args.coset_length, args.n_max)
        obj = rep.to_json()
        rows = [[k, len(v)] for k, v in sorted(rep.witnesses.items())]
        _write(args, obj, rows, ["level [cosets]", "witnesses [tuples]"])
        return OK if rep.exhaustive else TRUNCATED
    space = GroupSpace.build(p, args.radius)
    rows = []
    reports = {}
    for R in sorted(set([args.radius] + [r for r in (args.radius - 2, args.radius - 4) if r >= 1])):
        sp = space if R == space.radius else space.restrict(R)
        reports[R] = geometric_height(sp, hs, args.bound, args.delta_grid)
        rows.append([R, reports[R].height])
    rep = reports[space.radius]
    obj = rep.to_json(space.graph.names)
    obj["height_by_radius"] = {str(r): h for r, h in rows}
    _write(args, obj, rows, ["R [word length]", "height [levels]"])
    return TRUNCATED if rep.meta.get("truncated") else OK


def cmd_graded(args) -> int:
    space = _space(args)
    h = _subgroups(args, space.presentation)[0]
    v = graded_verdict(space, h, args.mode or "auto", L=args.coset_length, n_max=args.n_max,
                       B=args.bound, seed=args.seed)
    rows = [[lv.level, lv.family_size, int(lv.embedding.proper), fmt(lv.embedding.delta_el.delta4),
             fmt(lv.path_connected), int(lv.verdict)] for lv in v.levels]
    _write(args, v.to_json(), rows, ["level [index]", "pieces [count]", "proper [0/1]",
                                     "delta_el [four-point, d_i units]", "D [d units]", "verdict [0/1]"])
    for note in v.truncated:
        print(note, file=sys.stderr)
    return OK if v.overall else (TRUNCATED if v.truncation_only else FALSE)


def cmd_meet(args) -> int:
    space = _space(args)
    hs = _subgroups(args, space.presentation)
    H = orbit_points(hs[0], space.ball)
    Ysub = hs[1] if len(hs) > 1 else hs[0]
    fam = coset_pieces(Ysub, space.ball, reps=[args.coset])
    Delta = Fraction(args.delta_grid[0]) if args.delta_grid else Fraction(10)
    params = MeetingParams(Delta, Fraction(args.eps), space.delta.delta4)
    rep = detect_meetings(H, fam.pieces[0], params, space.graph, within=space.window())
    _write(args, rep.to_json(space.graph.names))
    return OK


def cmd_roundtrip(args) -> int:
    space = _space(args)
    h = _subgroups(args, space.presentation)[0]
    rt = roundtrip_theorem_check(space, h, seed=args.seed, B=args.bound)
    rows = [[D0, n] for D0, n in rt.properness["max_orbit_points"].items()]
    _write(args, rt.to_json(), rows, ["D0 [d units]", "orbit_points [max count over centers]"])
    return OK if rt.agree else FALSE


COMMANDS = {"ball": cmd_ball, "delta": cmd_delta, "electrify": cmd_electrify, "horoball": cmd_horoball,
            "height": cmd_height, "graded": cmd_graded, "meet": cmd_meet, "roundtrip": cmd_roundtrip}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gglab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--presentation", help="presentation file (gens:/rel:/electrify: lines)")
    ap.add_argument("--subgroup", action="append", help="subgroup file, one generator word per line")
    ap.add_argument("--graph", help="graph JSON (delta only)")
    ap.add_argument("-R", "--radius", type=int, default=8)
    ap.add_argument("-L", "--coset-length", type=int, default=6)
    ap.add_argument("--n-max", type=int, default=6, help="largest tuple size searched (algebraic height)")
    ap.add_argument("--mode", choices=["algebraic", "geometric"], default=None)
    ap.add_argument("--delta-grid", type=lambda s: [int(x) for x in s.split(",")], default=None,
                    help="comma separated Delta values")
    ap.add_argument("--eps", default="1/100")
    ap.add_argument("--bound", type=Fraction, default=None, help="boundedness threshold B")
    ap.add_argument("--depth", type=int, default=4, help="horoball depth K")
    ap.add_argument("--coset", default="", help="coset representative for meet")
    ap.add_argument("--electrify", action="append", help="generator whose cyclic cosets are coned off")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sample", type=int, default=None)
    ap.add_argument("--exact", action="store_true")
    ap.add_argument("--out", default=".")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "height" and args.mode is None:
        args.mode = "algebraic"
    try:
        return COMMANDS[args.command](args)
    except (GGLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
