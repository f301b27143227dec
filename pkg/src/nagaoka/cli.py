"""Command-line front end.

Subcommands: basis, connectivity, assemble, ed, spin, largeu, certify,
reproduce.  Structured results are JSON (CSV for the large-U sweep table);
the payload is a deterministic function of (model digest, command), so
repeated runs produce byte-identical output.  Wall-clock timing goes to
stderr only.  Exit codes: 0 success, 1 validation/usage error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .acceptance import run_acceptance
from .errors import (
    AmbiguousSpinError,
    ConvergenceError,
    DimensionBudgetError,
    InconsistencyError,
    ModelValidationError,
)
from .hamiltonian import (
    assemble_holstein_sector,
    assemble_hubbard_full,
    assemble_lang_firsov_sector,
    assemble_nagaoka_sector,
    assemble_radiation_sector,
)
from .model import load_model
from .positivity import pf_certificate, qgrid_holstein_certify
from .sector import as_half_integer, connectivity_check, enumerate_sector, sector_magnetizations
from .spectral import default_resolvent_z, eig_lowest, ground_report, resolvent_gap

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _parse_m(text: str) -> Fraction:
    return as_half_integer(Fraction(text))


def _sectors(model, args) -> list[Fraction]:
    if getattr(args, "all", False):
        return sector_magnetizations(model.sites)
    if getattr(args, "m", None) is None:
        raise ModelValidationError("cli", "pass --m M or --all")
    return [_parse_m(args.m)]


def _model_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _report(args, results) -> dict:
    return {
        "command": " ".join(args.echo),
        "model_digest": _model_digest(args.model) if getattr(args, "model", None) else None,
        "version": __version__,
        "results": results,
    }


def _emit(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _frac(value: Fraction) -> str:
    return str(value)


def _spectral_row(rep) -> dict:
    return {
        "m": _frac(rep.m),
        "ground_energy": rep.ground_energy,
        "degeneracy": rep.degeneracy,
        "gap": rep.gap,
        "stot2_expectation": rep.stot2_expectation,
        "resolved_s": _frac(rep.resolved_s),
        "dimension": rep.dimension,
        "sector_dimension": rep.sector_dimension,
        "boson_dimension": rep.boson_dimension,
        "cutoff": rep.cutoff,
    }


def _pick_form(model) -> str:
    if model.radiation is not None:
        return "radiation"
    if model.phonon is not None:
        return "holstein"
    return "nagaoka"


def _assemble(model, form: str, m, cutoff):
    if form == "nagaoka":
        return assemble_nagaoka_sector(model, m)
    if form == "holstein":
        return assemble_holstein_sector(model, m, cutoff=cutoff)
    if form == "langfirsov":
        return assemble_lang_firsov_sector(model, m, cutoff=cutoff)
    if form == "radiation":
        return assemble_radiation_sector(model, m, cutoff=cutoff)
    raise ModelValidationError("cli", f"unknown form {form!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_basis(args) -> int:
    model = load_model(args.model)
    rows = []
    for m in _sectors(model, args):
        basis = enumerate_sector(model, m)
        row = {"m": _frac(basis.m), "dimension": basis.dimension}
        if args.list:
            row["configs"] = [{"hole": c.hole, "up_mask": c.up_mask}
                              for c in basis.configs]
        rows.append(row)
    _emit(args, json.dumps(_report(args, rows), indent=2))
    return EXIT_OK


def _cmd_connectivity(args) -> int:
    model = load_model(args.model)
    rows = []
    for m in _sectors(model, args):
        rep = connectivity_check(model, m)
        rows.append({"m": _frac(rep.m), "dimension": rep.dimension,
                     "connected": rep.connected,
                     "orbit_sizes": list(rep.orbit_sizes)})
    _emit(args, json.dumps(_report(args, rows), indent=2))
    return EXIT_OK


def _cmd_assemble(args) -> int:
    model = load_model(args.model)
    if args.form == "hubbard":
        u = model.onsite_u if args.u is None else float(args.u)
        if not np.isfinite(u):
            raise ModelValidationError(
                "cli", "full-space assembly needs a finite U (pass --u)")
        op = assemble_hubbard_full(model, u)
        header = {"form": "hubbard", "u": u, "dimension": op.dimension,
                  "provenance": "full_space", "dropped_constant": 0.0}
    else:
        m = _parse_m(args.m) if args.m is not None else sector_magnetizations(model.sites)[-1]
        sector_h = _assemble(model, args.form, m, args.cutoff)
        op = sector_h.op
        header = {"form": args.form, "m": _frac(sector_h.m),
                  "dimension": op.dimension, "provenance": sector_h.provenance,
                  "dropped_constant": sector_h.dropped_constant,
                  "cutoff": sector_h.cutoff}
    header.update(_report(args, None))
    header.pop("results")
    coo = op.matrix.tocoo()
    lines = [json.dumps(header), f"{op.shape[0]} {op.shape[1]} {coo.nnz}"]
    order = np.lexsort((coo.col, coo.row))
    for idx in order:
        value = complex(coo.data[idx])
        lines.append(f"{coo.row[idx] + 1} {coo.col[idx] + 1} {value.real!r} {value.imag!r}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _ed_job(payload):
    model, form, m, cutoff = payload
    rep = ground_report(_assemble(model, form, m, cutoff))
    return _frac(m), _spectral_row(rep)


def _cmd_ed(args) -> int:
    model = load_model(args.model)
    form = args.form or _pick_form(model)
    jobs = [(model, form, m, args.cutoff) for m in _sectors(model, args)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_ed_job, jobs))
    else:
        rows = [_ed_job(job) for job in jobs]
    rows.sort(key=lambda kv: Fraction(kv[0]))
    _emit(args, json.dumps(_report(args, [row for _, row in rows]), indent=2))
    return EXIT_OK


def _cmd_spin(args) -> int:
    model = load_model(args.model)
    form = args.form or _pick_form(model)
    rows = []
    for m in sector_magnetizations(model.sites):
        rep = ground_report(_assemble(model, form, m, args.cutoff))
        rows.append((rep.m, rep))
    lines = [f"{'M':>6} {'dim':>6} {'E0':>22} {'deg':>4} {'gap':>12} {'S':>5}"]
    for m, rep in rows:
        lines.append(f"{_frac(m):>6} {rep.dimension:>6} {rep.ground_energy:>22.15f} "
                     f"{rep.degeneracy:>4} {rep.gap:>12.6e} {_frac(rep.resolved_s):>5}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _largeu_job(payload):
    model, u, z = payload
    delta = resolvent_gap(model, u, z)
    return u, delta


def _cmd_largeu(args) -> int:
    model = load_model(args.model)
    if args.z == "auto":
        z = default_resolvent_z(model)
    else:
        re_s, _, im_s = args.z.partition(",")
        z = complex(float(re_s), float(im_s))
        if z.imag == 0:
            raise ModelValidationError("cli", "--z needs a nonzero imaginary part")
    us = [float(tok) for tok in args.u_list.split(",") if tok]
    if not us:
        raise ModelValidationError("cli", "--u-list is empty")
    jobs = [(model, u, z) for u in us]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            pairs = list(pool.map(_largeu_job, jobs))
    else:
        pairs = [_largeu_job(job) for job in jobs]
    pairs.sort(key=lambda kv: kv[0])
    print(f"# command={' '.join(args.echo)} digest={_model_digest(args.model)} "
          f"z={z.real!r},{z.imag!r}", file=sys.stderr)
    lines = ["u,delta,delta_times_u"]
    for u, delta in pairs:
        lines.append(f"{u!r},{delta!r},{u * delta!r}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_certify(args) -> int:
    model = load_model(args.model)
    rows = []
    if args.qgrid:
        if args.spacing is None:
            raise ModelValidationError("cli", "--qgrid needs --spacing")
        for m in _sectors(model, args):
            res = qgrid_holstein_certify(model, m, args.qgrid, args.spacing)
            cert = res.certificate
            rows.append({"m": _frac(m), "basis": cert.basis_tag,
                         "offdiag_sign_ok": cert.offdiag_sign_ok,
                         "irreducible": cert.irreducible,
                         "ground_unique": cert.ground_unique,
                         "ground_strictly_positive": cert.ground_strictly_positive,
                         "min_entry": cert.min_entry,
                         "ground_energy": res.ground_energy,
                         "dropped_constant": res.dropped_constant,
                         "points": res.points, "spacing": res.spacing})
    else:
        for m in _sectors(model, args):
            h = assemble_nagaoka_sector(model, m)
            rep = ground_report(h)
            _, vecs = eig_lowest(h, 1)
            cert = pf_certificate(h, vecs[:, 0], rep.degeneracy)
            rows.append({"m": _frac(m), "basis": cert.basis_tag,
                         "offdiag_sign_ok": cert.offdiag_sign_ok,
                         "irreducible": cert.irreducible,
                         "ground_unique": cert.ground_unique,
                         "ground_strictly_positive": cert.ground_strictly_positive,
                         "min_entry": cert.min_entry})
    _emit(args, json.dumps(_report(args, rows), indent=2))
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    numbers = None
    if args.criteria:
        numbers = [int(tok) for tok in args.criteria.split(",") if tok]
    buffer_out = sys.stdout
    results, ok = run_acceptance(numbers, stream=buffer_out)
    if args.out:
        rows = [{"criterion": r.number, "name": r.name, "passed": r.passed,
                 "detail": r.detail} for r in results]
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"version": __version__, "results": rows, "all_passed": ok}, fh, indent=2)
    return EXIT_OK if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="nagaoka",
                     description="exact-diagonalization laboratory for one-hole "
                                 "ferromagnetism in Hubbard-type models")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, model=True, sector=True, cutoff=False, form=False):
        if model:
            p.add_argument("--model", required=True, help="model file path")
        if sector:
            group = p.add_mutually_exclusive_group()
            group.add_argument("--m", help="half-integer sector, e.g. 1/2 or -1")
            group.add_argument("--all", action="store_true", help="every sector")
        if cutoff:
            p.add_argument("--cutoff", type=int, default=None,
                           help="per-mode boson cutoff override")
        if form:
            p.add_argument("--form",
                           choices=["nagaoka", "holstein", "langfirsov", "radiation"],
                           default=None, help="Hamiltonian form (default: by model content)")
        p.add_argument("--out", default=None, help="write the payload to a file")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")

    p = sub.add_parser("basis", help="sector dimensions and configurations")
    common(p)
    p.add_argument("--list", action="store_true", help="include the configuration list")
    p.set_defaults(func=_cmd_basis)

    p = sub.add_parser("connectivity", help="orbit decomposition per sector")
    common(p)
    p.set_defaults(func=_cmd_connectivity)

    p = sub.add_parser("assemble", help="emit a Hamiltonian as sparse triplets")
    common(p, sector=False, cutoff=True)
    p.add_argument("--m", default=None, help="sector (default: fully polarized)")
    p.add_argument("--form", required=True,
                   choices=["hubbard", "nagaoka", "holstein", "langfirsov", "radiation"])
    p.add_argument("--u", type=float, default=None, help="finite U for --form hubbard")
    p.set_defaults(func=_cmd_assemble)

    p = sub.add_parser("ed", help="ground-state reports per sector")
    common(p, cutoff=True, form=True)
    p.set_defaults(func=_cmd_ed)

    p = sub.add_parser("spin", help="per-sector total-spin table")
    common(p, sector=False, cutoff=True, form=True)
    p.set_defaults(func=_cmd_spin)

    p = sub.add_parser("largeu", help="resolvent distance sweep over U")
    common(p, sector=False)
    p.add_argument("--u-list", required=True, help="comma-separated U values")
    p.add_argument("--z", default="auto", help="auto or RE,IM")
    p.set_defaults(func=_cmd_largeu)

    p = sub.add_parser("certify", help="positivity certificates per sector")
    common(p)
    p.add_argument("--qgrid", type=int, default=None, help="grid points per mode")
    p.add_argument("--spacing", type=float, default=None, help="grid spacing")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("reproduce", help="run the acceptance pipeline")
    p.add_argument("--criteria", default=None, help="comma-separated subset, e.g. 1,3,9")
    p.add_argument("--out", default=None, help="write a JSON summary")
    p.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.echo = ["nagaoka", *argv]
    start = time.perf_counter()
    try:
        code = args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        # covers ModelParseError/ModelValidationError and sector-range errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, InconsistencyError, AmbiguousSpinError,
            DimensionBudgetError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"# wall time {time.perf_counter() - start:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
