"""Command-line interface: ``hardyamp <command> [options]``.

Exit codes are shared by every command: 0 success, 2 abort (the protocol's
MDL test failed), 3 infeasible (LP or extractor constraints), 4 input error.
Reports are JSON with a ``schemaVersion`` field; curves are CSV.  Arguments
of the form ``builtin:<name>`` load bundled fixtures (``table1``,
``hardy222``, ``clifton``).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import data
from .bell import (
    CapacityError,
    ConditionalBox,
    DomainError,
    HardyFrame,
    StructuralError,
    classical_mdl_max,
    hardy_quantities,
    mdl_worst_case,
    validate_box,
)
from .extractor import cg_extract, exhaustive_bias, k_from_h, pipeline, raz_check, delta_raz
from .gadgets import Gadget, GadgetGame, complete_bases, four_copy_game, verify_gadget
from .polytope import NSProgram, chsh_coeff, entry_coeff, hardy_coeff, solve_ns
from .protocol import (
    BoxSequenceModel,
    SVParams,
    best_deterministic_model,
    bh_from_mdl,
    delta_exp_from_counts,
    h_bound,
    run_protocol,
)
from .quantum import THETA_STAR

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ABORT, EXIT_INFEASIBLE, EXIT_INPUT = 0, 2, 3, 4
KRATE_COLUMNS = ["eps", "t", "hBound", "deltaRaz", "mRaz", "kReal", "kFloor"]
BUILTIN = {"table1": "table1_counts.csv", "hardy222": "hardy222.json", "clifton": "clifton.json"}


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 4), not the argparse default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# --- loading helpers ----------------------------------------------------------

def _builtin_text(spec: str) -> str | None:
    if not spec.startswith("builtin:"):
        return None
    name = spec.split(":", 1)[1]
    if name not in BUILTIN:
        raise InputError(f"unknown builtin {name!r}; choose from {sorted(BUILTIN)}")
    return resources.files("hardyamp.fixtures").joinpath(BUILTIN[name]).read_text()


def _read_json(spec: str) -> dict:
    text = _builtin_text(spec)
    if text is None:
        text = Path(spec).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{spec}: line {exc.lineno}: {exc.msg}") from None


def load_counts(spec: str, fmt: str | None = None) -> data.CountTable:
    text = _builtin_text(spec)
    if text is not None:
        return data.parse_counts_csv(text)
    return data.ingest_counts(spec, fmt)


def load_frame(spec: str) -> HardyFrame:
    return HardyFrame.from_dict(_read_json(spec))


def _parse_event(s: str) -> tuple:
    try:
        ev = tuple(int(v) for v in s.split(","))
    except ValueError:
        raise InputError(f"event must be a,b,x,y integers, got {s!r}") from None
    if len(ev) != 4:
        raise InputError(f"event must have four entries, got {s!r}")
    return ev


def _float_list(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def eps_grid(spec: str) -> list[float]:
    """``start:stop:step`` (stop inclusive up to rounding) or a comma list."""
    spec = spec.strip()
    if not spec:
        return []
    if ":" in spec:
        start, stop, step = (float(v) for v in spec.split(":"))
        if step <= 0:
            raise InputError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(max(0, count))]
    return _float_list(spec)


def emit(report: dict, out: str | None) -> None:
    report = {"schemaVersion": SCHEMA_VERSION, **report}
    text = json.dumps(report, indent=1, default=_jsonable)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _clean(x: float):
    return x if math.isfinite(x) else None


# --- commands -------------------------------------------------------------------

def cmd_validate(args) -> int:
    box = ConditionalBox.from_dict(_read_json(args.inp))
    rep = validate_box(box, require_ns=not args.no_ns, tol=args.tol)
    out = {
        "command": "validate",
        "valid": rep.valid,
        "violations": [str(v) for v in rep.violations[:50]],
    }
    if args.frame:
        pH, zH, _ = hardy_quantities(box, load_frame(args.frame))
        out.update(pH=pH, zH=zH)
    emit(out, args.out)
    return EXIT_OK if rep.valid else EXIT_INPUT


def cmd_bound(args) -> int:
    frame = load_frame(args.frame)
    sc = frame.scenario
    if args.objective == "pH":
        coeff = entry_coeff(sc, frame.hardy_event)
    elif args.objective == "BH":
        coeff = hardy_coeff(frame)
    elif args.objective == "chsh":
        coeff = chsh_coeff(sc)
    elif args.objective == "chsh-2BH":
        coeff = chsh_coeff(sc) - 2.0 * hardy_coeff(frame)
    else:
        if not args.event:
            raise InputError("--objective entry needs --event a,b,x,y")
        coeff = entry_coeff(sc, _parse_event(args.event))
    sense = args.sense or ("min" if args.objective == "chsh-2BH" else "max")
    prog = NSProgram(sc, coeff, sense, frame=frame, zeros=args.zeros, z_h=args.zh)
    if args.delta is not None:
        prog.with_mdl(args.delta, args.eps)
    sol = solve_ns(prog, tie_break="none" if args.no_lex else "lex")
    out = {"command": "bound", "objective": args.objective, "sense": sense, "zeros": args.zeros,
           "status": sol.status, "value": _clean(sol.value)}
    if sol.optimal:
        out["certificate"] = sol.certificate()
        if args.witness:
            out["witness"] = sol.witness.to_dict()
    emit(out, args.out)
    return EXIT_OK if sol.optimal else EXIT_INFEASIBLE


def cmd_mdl(args) -> int:
    frame = load_frame(args.frame)
    out = {"command": "mdl", "eps": args.eps}
    if args.classical:
        out["classicalMax"] = classical_mdl_max(frame, args.eps)
    if args.box:
        box = ConditionalBox.from_dict(_read_json(args.box))
        out["boxWorstCase"] = mdl_worst_case(box, frame, args.eps)
    if args.inp:
        table = load_counts(args.inp, args.format)
        d = delta_exp_from_counts(table, args.eps, frame)
        out.update(n=table.n, deltaExp=d, bhLowerBound=bh_from_mdl(d, args.eps))
    emit(out, args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    table = load_counts(args.inp, args.format)
    n = args.n or table.n
    d = delta_exp_from_counts(table, args.eps)
    out = {"command": "certify", "eps": args.eps, "t": args.t, "n": n, "deltaExp": d}
    if not d > 0:
        out["verdict"] = "abort"
        emit(out, args.out)
        return EXIT_ABORT
    pl = pipeline(d, args.eps, n, args.t)
    out.update(
        hBound=pl.certificate.hBound,
        argmax={"deltaAz": pl.certificate.deltaAz, "kappa": pl.certificate.kappa},
        certificate=pl.certificate.to_dict(),
        raz=pl.raz.to_dict(),
        k={"raw": pl.k.raw, "kReal": pl.k.kReal, "kFloor": pl.k.kFloor},
        security=pl.security.to_dict(),
    )
    ok = pl.raz.feasible and pl.k.kFloor >= 1
    out["verdict"] = "accept" if ok else "infeasible"
    emit(out, args.out)
    return EXIT_OK if ok else EXIT_INFEASIBLE


def krate_rows(delta_for_eps, n: float, ts: list[float], grid: list[float]) -> list[dict]:
    rows = []
    for eps in grid:
        d = delta_for_eps(eps)
        h = h_bound(d, eps, n).h if d > 0 else 0.0
        raz = raz_check(n, eps, h)
        for t in ts:
            kb = k_from_h(h, eps, n, t)
            rows.append({"eps": eps, "t": t, "hBound": h, "deltaRaz": delta_raz(eps, n), "mRaz": raz.mRaz,
                         "kReal": kb.kReal, "kFloor": kb.kFloor})
    return rows


def cmd_krate(args) -> int:
    table = load_counts(args.inp, args.format)
    n = args.n or table.n
    rows = krate_rows(lambda e: delta_exp_from_counts(table, e), n, _float_list(args.t), eps_grid(args.eps_grid))
    buf = io.StringIO()
    w = csv.DictWriter(buf, KRATE_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = SVParams(args.eps)
    frame = load_frame(args.frame)
    if args.model == "honest":
        theta = THETA_STAR if args.theta == "opt" else float(args.theta)
        model = BoxSequenceModel("honest", theta=theta, eta=args.eta)
    elif args.model == "deterministic":
        model = best_deterministic_model(frame, params, args.mode)
    else:
        model = BoxSequenceModel("box", box=ConditionalBox.from_dict(_read_json(args.box)))
    tr = run_protocol(model, params, args.n, seed=args.seed, mode=args.mode, frame=frame)
    table = data.CountTable(frame.scenario, tr.counts())
    if args.counts:
        data.export_counts(table, args.counts)
    if args.transcript:
        Path(args.transcript).write_text(tr.to_csv())
    out = {"command": "simulate", "model": args.model, "eps": args.eps, "n": args.n, "seed": args.seed,
           "mode": args.mode, "Ln": tr.Ln, "counts": [dict(zip(data.CSV_HEADER, r)) for r in table.rows()]}
    if args.delta is not None:
        out["delta"] = args.delta
        out["accepted"] = bool(tr.Ln >= args.delta)
    emit(out, args.out)
    return EXIT_OK if args.delta is None or tr.Ln >= args.delta else EXIT_ABORT


def cmd_gadget(args) -> int:
    raw = _read_json(args.source)
    if args.action == "verify":
        g = Gadget.from_dict(raw)
        v = verify_gadget(g, complete=not args.no_complete)
        print(f"gadget: {str(v.is_gadget).lower()}, colorings enumerated: {v.colorings}")
        if args.out:
            rep = {"schemaVersion": SCHEMA_VERSION, "command": "gadget verify", "isGadget": v.is_gadget,
                   "colorings": v.colorings, "firstOne": v.first_one, "secondOne": v.second_one,
                   "bothOne": v.both_one}
            Path(args.out).write_text(json.dumps(rep, indent=1) + "\n")
        return EXIT_OK if v.is_gadget else EXIT_INFEASIBLE
    g = Gadget.from_dict(raw)
    game: GadgetGame = complete_bases(g) if args.action == "compile" else four_copy_game(g)
    sc = game.scenario
    out = {"command": f"gadget {args.action}", "scenario": sc.to_dict(), "vertices": len(game.vectors),
           "game": game.to_dict()}
    emit(out, args.out)
    return EXIT_OK


def _bits(s: str) -> np.ndarray:
    if not s or set(s) - {"0", "1"}:
        raise InputError(f"expected a nonempty 0/1 string, got {s!r}")
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


def cmd_extract(args) -> int:
    out = {"command": "extract"}
    if args.bias is not None:
        out.update(length=args.bias, bias=exhaustive_bias(args.bias))
    else:
        if args.x is None or args.y is None:
            raise InputError("extract needs --x and --y bit strings, or --bias LENGTH")
        out["bit"] = cg_extract(_bits(args.x), _bits(args.y))
    emit(out, args.out)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hardyamp", description="Hardy-paradox randomness amplification toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, inp_default=None, inp_required=False):
        sp.add_argument("--in", dest="inp", default=inp_default, required=inp_required,
                        help="input file or builtin:<name>")
        sp.add_argument("--out", help="also write the report here")
        return sp

    sp = common(sub.add_parser("validate", help="check a box JSON for normalisation and no-signaling"),
                inp_required=True)
    sp.add_argument("--frame", help="also report Hardy quantities for this frame")
    sp.add_argument("--no-ns", action="store_true", help="skip the no-signaling check")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.set_defaults(func=cmd_validate)

    sp = common(sub.add_parser("bound", help="optimise over the no-signaling polytope"))
    sp.add_argument("--frame", default="builtin:hardy222")
    sp.add_argument("--objective", choices=["pH", "BH", "chsh", "chsh-2BH", "entry"], default="pH")
    sp.add_argument("--event", help="a,b,x,y for --objective entry")
    sp.add_argument("--sense", choices=["max", "min"])
    sp.add_argument("--zeros", choices=["none", "exact", "relaxed"], default="none")
    sp.add_argument("--zh", type=float, default=0.0, help="zero-set mass for --zeros relaxed")
    sp.add_argument("--delta", type=float, help="require an MDL value of at least delta")
    sp.add_argument("--eps", type=float, default=0.0)
    sp.add_argument("--witness", action="store_true", help="include the optimal box")
    sp.add_argument("--no-lex", action="store_true",
                    help="skip the lexicographically-smallest witness tie-break (one extra LP per variable)")
    sp.set_defaults(func=cmd_bound)

    sp = common(sub.add_parser("mdl", help="MDL value of counts, a box, or the classical maximum"))
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--frame", default="builtin:hardy222")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--box", help="box JSON; reports its worst-case MDL value")
    sp.add_argument("--classical", action="store_true", help="exhaustive deterministic maximum")
    sp.set_defaults(func=cmd_mdl)

    sp = common(sub.add_parser("certify", help="counts to certified min-entropy and output length"),
                inp_default="builtin:table1")
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--t", type=float, default=5.0)
    sp.add_argument("--n", type=int, help="run count (default: table total)")
    sp.set_defaults(func=cmd_certify)

    sp = common(sub.add_parser("krate", help="CSV of k(eps, t) over an eps grid"), inp_default="builtin:table1")
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--t", default="5,10,100", help="comma list of security parameters")
    sp.add_argument("--eps-grid", default="0:0.205:0.005", help="start:stop:step or comma list")
    sp.add_argument("--n", type=int)
    sp.set_defaults(func=cmd_krate)

    sp = sub.add_parser("simulate", help="seeded Monte-Carlo run of the protocol")
    sp.add_argument("--out", help="also write the report here")
    sp.add_argument("--model", choices=["honest", "deterministic", "box"], default="honest")
    sp.add_argument("--theta", default="opt", help="'opt' or an angle in radians")
    sp.add_argument("--eta", type=float, default=0.0, help="white-noise weight")
    sp.add_argument("--box", help="box JSON for --model box")
    sp.add_argument("--frame", default="builtin:hardy222")
    sp.add_argument("--eps", type=float, default=0.0)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--mode", choices=["iid", "uniform", "adaptive"], default="iid")
    sp.add_argument("--delta", type=float, help="acceptance threshold for L_n")
    sp.add_argument("--counts", help="write the count table (csv or json)")
    sp.add_argument("--transcript", help="write the per-run transcript CSV")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("gadget", help="verify or compile a 01-gadget")
    sp.add_argument("action", choices=["verify", "compile", "fourcopy"])
    sp.add_argument("source", help="gadget JSON or builtin:clifton")
    sp.add_argument("--out")
    sp.add_argument("--no-complete", action="store_true", help="colour the raw graph without completing bases")
    sp.set_defaults(func=cmd_gadget)

    sp = sub.add_parser("extract", help="inner-product extractor")
    sp.add_argument("--out")
    sp.add_argument("--x", help="first source bits, e.g. 0110")
    sp.add_argument("--y", help="second source bits")
    sp.add_argument("--bias", type=int, metavar="LENGTH", help="exhaustive bias for this length")
    sp.set_defaults(func=cmd_extract)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, data.ParseError, DomainError, StructuralError, CapacityError,
            FileNotFoundError, IsADirectoryError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
