"""Command-line front end.

Exit codes: 0 on success, 2 on usage or domain errors, 1 on internal errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import io as nsio
from .analysis import VerificationError, fig3_data, verify_protocol_identity
from .boxes import (
    Box,
    DomainError,
    PlaneCoords,
    chsh,
    chsh_all8,
    depolarize,
    make_antipr,
    make_correlated,
    make_one,
    make_pa,
    make_pc,
    make_plane,
    make_pr,
)
from .dynamics import fixed_points_1d, fixed_points_2d, iterate, map_t, map_t2
from .region import fig4_data, region_classify
from .search import THREADS_ENV, optimal_two_copy_search
from .wiring import ProtocolWiring, compose, decode, encode, paper_party

log = logging.getLogger("nsdistill")

NAMED = {
    "pr": make_pr,
    "pc": make_pc,
    "antipr": make_antipr,
    "pa": make_pa,
    "one": make_one,
}


class UsageError(DomainError):
    pass


def _read_source(path: str, cache: dict) -> str:
    if path == "-":
        if "-" not in cache:
            cache["-"] = sys.stdin.read()
        return cache["-"]
    with open(path) as fh:
        return fh.read()


def _add_box_source(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--name", choices=sorted(NAMED), help="named box")
    p.add_argument("--eps", type=float, help="correlated box eps*PR + (1-eps)*Pc")
    p.add_argument("--xi", type=float, help="PR weight on the PR/Pc/anti-PR plane")
    p.add_argument("--gamma", type=float, help="Pc weight on the PR/Pc/anti-PR plane")
    p.add_argument("--box", metavar="PATH", help="box file (JSON or CSV, '-' for stdin)")
    p.set_defaults(_box_required=required)


def _box_from_args(args, cache: dict) -> Box | None:
    chosen = [k for k in ("name", "eps", "box") if getattr(args, k) is not None]
    plane = args.xi is not None or args.gamma is not None
    if len(chosen) + plane > 1:
        raise UsageError("give exactly one of --name, --eps, --xi/--gamma, --box")
    if plane:
        if args.xi is None or args.gamma is None:
            raise UsageError("--xi and --gamma go together")
        return make_plane(PlaneCoords(args.xi, args.gamma))
    if args.name is not None:
        return NAMED[args.name]()
    if args.eps is not None:
        return make_correlated(args.eps)
    if args.box is not None:
        return nsio.box_from_text(_read_source(args.box, cache))
    if args._box_required:
        raise UsageError("no box given (use --name, --eps, --xi/--gamma or --box)")
    return None


def _emit_box(b: Box, fmt: str) -> None:
    print(nsio.box_to_json(b) if fmt == "json" else nsio.box_to_csv(b))


def _state_start(args):
    if args.eps is not None and (args.xi is not None or args.gamma is not None):
        raise UsageError("give either --eps or --xi/--gamma")
    if args.eps is not None:
        return args.eps, map_t
    if args.xi is None or args.gamma is None:
        raise UsageError("need --eps or both --xi and --gamma")
    return PlaneCoords(args.xi, args.gamma), map_t2


def cmd_chsh(args, cache):
    b = _box_from_args(args, cache)
    if args.all8:
        print(",".join(nsio.fmt(v) for v in chsh_all8(b)))
    else:
        print(nsio.fmt(chsh(b)))


def cmd_box(args, cache):
    _emit_box(_box_from_args(args, cache), args.format)


def cmd_compose(args, cache):
    first = _box_from_args(args, cache)
    second = first if args.with_ is None else nsio.box_from_text(_read_source(args.with_, cache))
    w = ProtocolWiring(decode(args.alice), decode(args.bob))
    _emit_box(compose(first, second, w), args.format)


def cmd_map(args, cache):
    start, fn = _state_start(args)
    traj = iterate(fn, start, max_n=args.steps, max_iter=max(args.steps, 1))
    state = traj.final
    if isinstance(state, PlaneCoords):
        print(f"{nsio.fmt(state.xi)},{nsio.fmt(state.gamma)}")
    else:
        print(nsio.fmt(state))


def cmd_trajectory(args, cache):
    start, fn = _state_start(args)
    traj = iterate(fn, start, max_n=args.steps, chsh_threshold=args.until_chsh,
                   tol=args.tol, max_iter=args.max_iter)
    log.info("terminated by %s after %d steps", traj.terminated_by, traj.steps)
    if args.format == "json":
        pts = [[p.xi, p.gamma] if isinstance(p, PlaneCoords) else p for p in traj.points]
        print(json.dumps({"points": pts, "chsh": traj.chsh, "terminated_by": traj.terminated_by}))
    else:
        nsio.write_trajectory(sys.stdout, traj)


def cmd_fixed_points(args, cache):
    reports = fixed_points_1d() if args.dim == 1 else fixed_points_2d()
    rows = []
    for r in reports:
        loc = [r.location.xi, r.location.gamma] if isinstance(r.location, PlaneCoords) else [r.location]
        rows.append({"location": loc, "eigenvalues": r.eigenvalues, "classification": r.classification})
    if args.format == "json":
        print(json.dumps(rows))
        return
    loc_cols = ["eps"] if args.dim == 1 else ["xi", "gamma"]
    eig_cols = [f"lambda{k}" for k in range(len(rows[0]["eigenvalues"]))]
    print(",".join(loc_cols + eig_cols + ["classification"]))
    for r in rows:
        print(",".join([nsio.fmt(v) for v in r["location"] + r["eigenvalues"]] + [r["classification"]]))


def cmd_depolarize(args, cache):
    _emit_box(depolarize(_box_from_args(args, cache)), args.format)


def cmd_verify(args, cache):
    report = verify_protocol_identity(args.grid_n, strict=False)
    if args.format == "json":
        print(json.dumps({"max_deviation": report.max_deviation, "worst_eps": report.worst_eps,
                          "ok": report.ok, "grid_n": args.grid_n}))
    else:
        print("eps,deviation")
        for e, d in zip(report.eps, report.deviations):
            print(f"{nsio.fmt(e)},{nsio.fmt(d)}")
    if not report.ok:
        raise VerificationError(f"max deviation {report.max_deviation:.3e} at eps={report.worst_eps}")


def cmd_search(args, cache):
    b = _box_from_args(args, cache)

    def progress(frac):
        print(f"search: {100 * frac:.0f}%", file=sys.stderr)

    res = optimal_two_copy_search(
        b, args.include_crossed, threads=args.threads, sample=args.sample, seed=args.seed,
        max_pairs=args.max_pairs, checkpoint=args.checkpoint,
        progress=None if args.quiet else progress, restrict=args.restrict,
    )
    if args.format == "json":
        print(nsio.search_result_to_json(res))
    else:
        print("alice,bob")
        for a, bb in res.best_pairs:
            print(f"{a},{bb}")
        log.info("best_chsh=%r n_best=%d evaluated=%d", res.best_chsh, res.n_best, res.evaluated)


def cmd_region(args, cache):
    nsio.write_region(sys.stdout, region_classify(args.resolution, args.max_iter))


def cmd_fig3(args, cache):
    data = fig3_data(args.grid_n, args.start_chsh)
    if args.table == "curve":
        nsio.write_fig3(sys.stdout, data)
    else:
        nsio.write_staircase(sys.stdout, data)


def cmd_fig4(args, cache):
    data = fig4_data(args.resolution, args.max_iter, args.samples)
    if args.table == "cells":
        nsio.write_region(sys.stdout, data.grid)
    elif args.table == "quantum":
        nsio.write_curve(sys.stdout, data.quantum)
    else:
        nsio.write_curve(sys.stdout, data.one_step)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsdistill", description="Non-locality distillation toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, formats=True):
        p = sub.add_parser(name, help=help_, description=help_)
        if formats:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=int, default=0, help="seed for optional sampling")
        p.set_defaults(func=fn)
        return p

    p = add("chsh", cmd_chsh, "CHSH value of a box", formats=False)
    _add_box_source(p)
    p.add_argument("--all8", action="store_true", help="print all eight CHSH expressions")

    p = add("box", cmd_box, "print a box table")
    _add_box_source(p)

    protocol_id = encode(paper_party())
    p = add("compose", cmd_compose, "compose two boxes under a wiring pair")
    _add_box_source(p)
    p.add_argument("--with", dest="with_", metavar="PATH", help="second box file (default: same box)")
    p.add_argument("--alice", type=int, default=protocol_id, help="Alice strategy id")
    p.add_argument("--bob", type=int, default=protocol_id, help="Bob strategy id")

    for name, fn, help_ in (("map", cmd_map, "iterate the distillation map a fixed number of times"),
                            ("trajectory", cmd_trajectory, "distillation trajectory as CSV")):
        p = add(name, fn, help_, formats=(name == "trajectory"))
        p.add_argument("--eps", type=float)
        p.add_argument("--xi", type=float)
        p.add_argument("--gamma", type=float)
    sub.choices["map"].add_argument("--steps", type=int, default=1)
    tp = sub.choices["trajectory"]
    tp.add_argument("--steps", type=int, help="stop after this many steps")
    tp.add_argument("--until-chsh", type=float, help="stop once CHSH exceeds this value")
    tp.add_argument("--tol", type=float, help="stop once successive states are this close")
    tp.add_argument("--max-iter", type=int, default=200)

    p = add("fixed-points", cmd_fixed_points, "fixed points and their stability")
    p.add_argument("--dim", type=int, choices=(1, 2), default=1)

    p = add("depolarize", cmd_depolarize, "isotropic box with the same CHSH value")
    _add_box_source(p)

    p = add("verify", cmd_verify, "check box-level distillation against the closed-form map")
    p.add_argument("--grid-n", type=int, default=101)

    p = add("search", cmd_search, "exhaustive search over deterministic two-copy wirings")
    _add_box_source(p)
    p.add_argument("--include-crossed", dest="include_crossed", action="store_true", default=True)
    p.add_argument("--same-order", dest="include_crossed", action="store_false")
    p.add_argument("--threads", type=int, default=int(os.environ.get(THREADS_ENV, "1")))
    p.add_argument("--sample", type=int, help="sample this many Alice strategies")
    p.add_argument("--max-pairs", type=int, default=100_000)
    p.add_argument("--checkpoint", metavar="PATH")
    p.add_argument("--restrict", choices=("xor",))
    p.add_argument("--quiet", action="store_true", help="no progress on stderr")

    for name, fn, help_ in (("region", cmd_region, "classification grid of the PR/Pc/anti-PR plane"),
                            ("fig4", cmd_fig4, "region grid and curves for the plane section")):
        p = add(name, fn, help_, formats=False)
        p.add_argument("--resolution", type=int, default=401)
        p.add_argument("--max-iter", type=int, default=200)
    f4 = sub.choices["fig4"]
    f4.add_argument("--table", choices=("cells", "quantum", "one-step"), default="cells")
    f4.add_argument("--samples", type=int, default=201)

    p = add("fig3", cmd_fig3, "final versus initial CHSH for correlated boxes", formats=False)
    p.add_argument("--grid-n", type=int, default=101)
    p.add_argument("--start-chsh", type=float, default=2.2)
    p.add_argument("--table", choices=("curve", "staircase"), default="curve")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args, {})
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
