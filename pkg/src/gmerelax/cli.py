"""Command-line interface.

Exit codes: 0 when the command ran and (for detection-type commands) found
entanglement, 2 when it ran but detected nothing or the program was
infeasible/unbounded, 1 on errors.  Errors are reported on stderr as a JSON
object ``{"error": ..., "message": ...}``.  The primary result goes to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io as gio
from .hermitian import (
    Bipartition,
    DimensionError,
    SubsystemShape,
    enumerate_bipartitions,
    lambda_min,
    projector,
)
from .positive_maps import parse_map
from .relaxations import MixerConfig, membership_distance, mixer
from .solver import SolverError
from .states import GueModelParams, QutritFamilyParams, ghz, gue, qutrit_family, rho_g
from .volume import check_study, default_jobs, scaling_study, study_csv
from .witnesses import WitnessSet, ccnr_sum, lift, optimal_witness_sdp, witness_from_map

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2

log = logging.getLogger("gmerelax")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of printing usage and exiting.

    Prefix matching is off so that short flags such as ``--c`` never resolve to
    a longer option like ``--config``.
    """

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message: str):
        raise UsageError(message)


# --------------------------------------------------------------------------
# argument types


def sci_int(text: str) -> int:
    """Integer that may be written in scientific notation (``2e3``)."""
    value = float(text)
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    return int(value)


def int_list(text: str) -> list[int]:
    return [sci_int(t) for t in text.split(",") if t.strip()]


def split_maps(text: str) -> list[str]:
    """Split ``"ppt,gchoi:1,0.001,1000*,choi"`` into map specs."""
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    out, i = [], 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.startswith("gchoi:"):
            if i + 2 >= len(tokens):
                raise UsageError(f"incomplete gchoi spec in {text!r}")
            out.append(",".join(tokens[i:i + 3]))
            i += 3
        else:
            out.append(tok)
            i += 1
    return out


def parse_per_cut(text: str, shape) -> dict[Bipartition, list]:
    """``"0|12=ppt,choi;01|2=ppt"`` into a cut -> maps table."""
    table = {}
    for item in filter(None, (s.strip() for s in text.split(";"))):
        if "=" not in item:
            raise UsageError(f"per-cut entry {item!r} needs the form CUT=MAPS")
        cut_text, maps_text = item.split("=", 1)
        cut = Bipartition.parse(cut_text, shape)
        table[cut] = [parse_map(s) for s in split_maps(maps_text)]
    return table


def _check_input(path: str) -> str:
    if not Path(path).is_file():
        raise FileNotFoundError(f"input file {path!r} does not exist")
    return path


def _check_output(path: str) -> str:
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory {str(parent)!r} does not exist")
    return path


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


# --------------------------------------------------------------------------
# subcommands


def cmd_detect(args) -> int:
    f = gio.read_operator(_check_input(args.state))
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
    shape = f.shape
    if args.per_cut:
        table = {c: [] for c in enumerate_bipartitions(shape)}
        table.update(parse_per_cut(args.per_cut, shape))
        config = MixerConfig(shape, table)
    else:
        config = MixerConfig.uniform(shape, [parse_map(s) for s in split_maps(args.maps)])
    if args.mode == "mixer":
        res = mixer(f.data, config, tol=args.tol, max_iter=args.max_iter)
        per_cut = []
        for i, (cut, sigma) in enumerate(res.decomposition):
            entry = {"cut": cut.label, "maps": [str(m) for m in config.maps_per_cut[cut]],
                     "min_eigenvalue": lambda_min(sigma), "sigma_file": None}
            if args.out_dir:
                path = os.path.join(args.out_dir, f"sigma_{i}.json")
                gio.write_operator(path, sigma, shape.dims, [cut])
                entry["sigma_file"] = path
            per_cut.append(entry)
        _emit({"mode": "mixer", "s_opt": res.s_opt, "detected": res.detected_gme,
               "verdict": res.verdict, "status": res.status.value, "gap": res.gap,
               "per_cut": per_cut})
        return EXIT_OK if res.detected_gme else EXIT_NEGATIVE
    res = membership_distance(f.data, config, tol=args.tol, max_iter=args.max_iter)
    closest = None
    if args.out_dir:
        closest = os.path.join(args.out_dir, "closest.json")
        gio.write_operator(closest, res.closest, shape.dims)
    detected = not res.member()
    _emit({"mode": "distance", "distance": res.distance, "detected": detected,
           "closest_file": closest})
    return EXIT_OK if detected else EXIT_NEGATIVE


def _read_witnesses(paths: Sequence[str]) -> WitnessSet:
    per_cut, shape = {}, None
    for p in paths:
        f = gio.read_operator(_check_input(p))
        if shape is not None and f.shape != shape:
            raise DimensionError(f"{p}: dims {f.shape.dims} differ from {shape.dims}")
        shape = f.shape
        if len(f.cuts) != 1:
            raise gio.FormatError(f"{p}: a bipartite witness file must name exactly one cut under 'cuts'")
        if f.cuts[0] in per_cut:
            raise gio.FormatError(f"{p}: a second witness for cut {f.cuts[0].label}")
        per_cut[f.cuts[0]] = f.data
    return WitnessSet(shape, per_cut)


def cmd_witness_lift(args) -> int:
    ws = _read_witnesses(args.inputs.split(","))
    _check_output(args.out)
    rho = gio.read_operator(_check_input(args.state)).data if args.state else None
    lw = lift(ws)
    gio.write_operator(args.out, lw.W_gme, ws.shape.dims, ws.cuts, kind="gme-witness")
    out = {"out": args.out, "dominance": {c.label: v for c, v in lw.dominance.items()},
           "expectation": None, "detected": None}
    code = EXIT_OK
    if rho is not None:
        val = lw.expectation(rho)
        out["expectation"] = val
        out["detected"] = val < 0
        code = EXIT_OK if val < 0 else EXIT_NEGATIVE
    _emit(out)
    return code


def cmd_witness_from_map(args) -> int:
    m = parse_map(args.map)
    if args.psi == "ghz":
        if not args.dims:
            raise UsageError("--psi ghz needs --dims")
        dims = int_list(args.dims)
        if len(set(dims)) != 1:
            raise UsageError("ghz needs equal local dimensions")
        psi = ghz(len(dims), dims[0])
    else:
        psi, shape = gio.read_vector(_check_input(args.psi))
        dims = list(shape.dims)
        psi = psi / np.linalg.norm(psi)
    _check_output(args.out)
    cut = Bipartition.parse(args.cut, SubsystemShape(tuple(dims)))
    W = witness_from_map(m, cut, psi)
    gio.write_operator(args.out, W, dims, [cut], map=str(m))
    _emit({"out": args.out, "cut": cut.label, "map": str(m), "min_eigenvalue": lambda_min(W)})
    return EXIT_OK


def cmd_witness_optimal(args) -> int:
    rho = gio.read_operator(_check_input(args.state))
    ws = _read_witnesses(args.inputs.split(","))
    if args.out:
        _check_output(args.out)
    mapped = None
    if args.mapped:
        specs = [parse_map(s) for s in split_maps(args.mapped)]
        if len(specs) == 1:
            mapped = specs[0]
        elif len(specs) == len(ws.cuts):
            mapped = dict(zip(ws.cuts, specs))
        else:
            raise UsageError("--mapped needs one map or one per input witness")
    res = optimal_witness_sdp(rho.data, ws, mapped, tol=args.tol, max_iter=args.max_iter)
    if res.witness is not None and args.out:
        gio.write_operator(args.out, res.witness, ws.shape.dims, ws.cuts, kind="gme-witness")
    detected = res.bounded and res.objective < 0
    _emit({"status": res.status, "objective": None if not res.bounded else res.objective,
           "detected": detected, "out": args.out if res.bounded else None})
    return EXIT_OK if detected else EXIT_NEGATIVE


def cmd_ccnr(args) -> int:
    f = gio.read_operator(_check_input(args.state))
    cut = Bipartition.parse(args.cut, f.shape)
    total = ccnr_sum(f.data, cut)
    entangled = total > 1 + 1e-9
    _emit({"cut": cut.label, "sum": total, "entangled": entangled})
    return EXIT_OK if entangled else EXIT_NEGATIVE


def cmd_sample(args) -> int:
    _check_output(args.out)
    kind = args.kind
    if kind == "ghz":
        psi = ghz(args.k, args.d)
        dims = [args.d] * args.k
        if args.vector:
            gio.write_vector(args.out, psi, dims)
        else:
            gio.write_operator(args.out, projector(psi), dims)
        _emit({"out": args.out, "dims": dims})
        return EXIT_OK
    if kind == "qutrit-family":
        params = QutritFamilyParams(args.a, args.b, args.c, args.p)
        gio.write_operator(args.out, qutrit_family(params), [3, 3, 3],
                           params={"a": args.a, "b": args.b, "c": args.c, "p": args.p})
        _emit({"out": args.out, "dims": [3, 3, 3]})
        return EXIT_OK
    if args.seed is None:
        raise UsageError(f"sample {kind} is stochastic and needs --seed")
    if kind == "gue":
        dims = int_list(args.dims)
        n = int(np.prod(dims))
        G = gue(n, args.seed)
        gio.write_operator(args.out, G, dims, seed=args.seed)
        _emit({"out": args.out, "dims": dims, "seed": args.seed})
        return EXIT_OK
    params = GueModelParams(args.d, args.k, args.alpha, args.seed)
    rho, G = rho_g(params, args.trial)
    gio.write_operator(args.out, rho, [args.d] * args.k, alpha=args.alpha, seed=args.seed)
    if args.direction_out:
        gio.write_operator(_check_output(args.direction_out), G, [args.d] * args.k)
    _emit({"out": args.out, "dims": [args.d] * args.k, "min_eigenvalue": lambda_min(rho)})
    return EXIT_OK


def cmd_volume_study(args) -> int:
    if args.seed is None:
        raise UsageError("volume-study is stochastic and needs --seed")
    if args.out:
        _check_output(args.out)
    records = scaling_study(int_list(args.d), args.k, args.trials, args.seed,
                            restarts=args.restarts, jobs=args.jobs)
    text = study_csv(records)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    problems = check_study(records)
    for p in problems:
        log.warning("%s", p)
    return EXIT_NEGATIVE if problems else EXIT_OK


# --------------------------------------------------------------------------
# parser


REFERENCE_DEFAULTS = {
    "tol": 1e-7,
    "max_iter": 200,
    "mode": "mixer",
    "maps": "ppt",
    "restarts": 8,
    "trials": 200,
}


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    d = dict(REFERENCE_DEFAULTS)
    d.update(defaults or {})
    p = _Parser(prog="gmerelax", description="Detect genuine multipartite entanglement with semidefinite relaxations.")
    p.add_argument("--config", help="JSON file overriding the defaults shown in --help")
    p.add_argument("--tol", type=float, default=d["tol"], help="solver tolerance (default %(default)s)")
    p.add_argument("--max-iter", type=sci_int, default=d["max_iter"],
                   help="solver iteration limit (default %(default)s)")
    p.add_argument("-v", "--verbose", action="store_true", help="diagnostics on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("detect", help="search for a decomposition in a relaxed biseparable set")
    q.add_argument("--state", required=True)
    q.add_argument("--maps", default=d["maps"], help="maps for every compatible cut (default %(default)s)")
    q.add_argument("--per-cut", help='explicit table such as "0|12=ppt,choi;01|2=ppt"')
    q.add_argument("--mode", choices=["mixer", "distance"], default=d["mode"])
    q.add_argument("--out-dir", help="directory for decomposition files")
    q.set_defaults(func=cmd_detect)

    w = sub.add_parser("witness", help="witness construction").add_subparsers(dest="action", required=True)
    q = w.add_parser("lift", help="combine bipartite witnesses")
    q.add_argument("--inputs", required=True, help="comma-separated witness files")
    q.add_argument("--out", required=True)
    q.add_argument("--state", help="report Tr(rho W) for this state")
    q.set_defaults(func=cmd_witness_lift)
    q = w.add_parser("from-map", help="witness from a positive map and a vector")
    q.add_argument("--map", required=True)
    q.add_argument("--cut", required=True)
    q.add_argument("--psi", required=True, help='vector file, rank-one state file, or "ghz"')
    q.add_argument("--dims", help="local dimensions when --psi ghz")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_witness_from_map)
    q = w.add_parser("optimal", help="optimise a witness dominating the inputs")
    q.add_argument("--state", required=True)
    q.add_argument("--inputs", required=True)
    q.add_argument("--mapped", help="dominance after applying these maps (one, or one per input)")
    q.add_argument("--out")
    q.set_defaults(func=cmd_witness_optimal)

    q = sub.add_parser("ccnr", help="realignment criterion across a cut")
    q.add_argument("--state", required=True)
    q.add_argument("--cut", required=True)
    q.set_defaults(func=cmd_ccnr)

    q = sub.add_parser("sample", help="write a state or random matrix")
    q.add_argument("kind", choices=["ghz", "qutrit-family", "gue", "rho-g"])
    q.add_argument("--out", required=True)
    q.add_argument("--k", type=sci_int, default=3)
    q.add_argument("--d", type=sci_int, default=2)
    q.add_argument("--vector", action="store_true", help="ghz: write the vector instead of the projector")
    q.add_argument("--a", type=float, default=1e-6)
    q.add_argument("--b", type=float, default=300.0)
    q.add_argument("--c", type=float, default=0.012)
    q.add_argument("--p", type=float, default=0.0)
    q.add_argument("--dims", default="2,2", help="gue: local dimensions")
    q.add_argument("--alpha", type=float, default=0.2)
    q.add_argument("--seed", type=sci_int)
    q.add_argument("--trial", type=sci_int, help="rho-g: substream index")
    q.add_argument("--direction-out", help="rho-g: also write the noise direction")
    q.set_defaults(func=cmd_sample)

    q = sub.add_parser("volume-study", help="mean widths versus local dimension")
    q.add_argument("--k", type=sci_int, required=True)
    q.add_argument("--d", required=True, help="comma-separated local dimensions")
    q.add_argument("--trials", type=sci_int, default=d["trials"])
    q.add_argument("--restarts", type=sci_int, default=d["restarts"])
    q.add_argument("--seed", type=sci_int)
    q.add_argument("--out", help="CSV path (stdout when omitted)")
    q.add_argument("--jobs", type=sci_int, default=None,
                   help=f"worker processes (default from GMERELAX_JOBS, currently {default_jobs()})")
    q.set_defaults(func=cmd_volume_study)
    return p


def _load_config(argv: Sequence[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    with open(_check_input(known.config), encoding="utf-8") as fh:
        cfg = json.load(fh)
    unknown = set(cfg) - set(REFERENCE_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys {sorted(unknown)}")
    return cfg


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser = build_parser(_load_config(argv))
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help
        return EXIT_ERROR if exc.code else EXIT_OK
    except Exception as exc:
        return _fail(exc)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except Exception as exc:
        return _fail(exc)


def _fail(exc: Exception) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SolverError) and exc.solution is not None:
        s = exc.solution
        payload["diagnostics"] = {"status": s.status.value, "iterations": s.iterations,
                                  "primal_infeasibility": s.primal_infeasibility,
                                  "dual_infeasibility": s.dual_infeasibility, "gap": s.gap}
    sys.stderr.write(json.dumps(payload) + "\n")
    return EXIT_ERROR


def main() -> None:  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
