"""Command line interface: ``spherical-dpw {solve,classify,verify,factorize}``.

Exit codes: 0 all oracles passed, 1 an oracle failed, 2 bad input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import laurent as lm
from .config import load_config
from .errors import DPWError, InputError, ValidationError
from .factorization import Tolerances, iwasawa
from .run import RunReport, _plain, classify, run_job

LOOP_FIELDS = 9


# ------------------------------------------------------------ loop files

def read_loop(path) -> lm.LaurentMatrix:
    """Parse a loop coefficient file.

    One line per exponent: ``n a11re a11im a12re a12im a21re a21im a22re a22im``.
    Blank lines and lines starting with ``#`` are ignored; missing exponents
    inside the range are zero.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read loop file {path}: {exc}") from exc
    terms = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != LOOP_FIELDS:
            raise InputError(f"{path}:{lineno}: expected {LOOP_FIELDS} fields, got {len(parts)}")
        try:
            n = int(parts[0])
            vals = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if not all(np.isfinite(vals)):
            raise InputError(f"{path}:{lineno}: non-finite coefficient")
        if n in terms:
            raise InputError(f"{path}:{lineno}: exponent {n} given twice")
        v = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
        terms[n] = v.reshape(2, 2)
    if not terms:
        raise InputError(f"{path}: no coefficient lines")
    return lm.LaurentMatrix.from_terms(terms)


def format_loop(L: lm.LaurentMatrix, drop_below: float = 0.0) -> str:
    lines = []
    for n in L.exponents():
        c = L.coeff(n)
        if np.max(np.abs(c)) <= drop_below:
            continue
        nums = []
        for a in c.reshape(4):
            nums += [a.real + 0.0, a.imag + 0.0]  # no negative zeros
        lines.append(f"{n} " + " ".join(f"{v:.17g}" for v in nums))
    return "\n".join(lines) + "\n"


def factorize_cmd(loop_path, out_dir=None, n_trunc: int = lm.DEFAULT_N_TRUNC,
                  tol: Tolerances = Tolerances(), stream=None) -> dict:
    """Factor the loop in ``loop_path``; writes ``<stem>.F.txt`` and ``<stem>.B.txt``."""
    stream = stream or sys.stdout
    loop_path = Path(loop_path)
    L = read_loop(loop_path)
    ok, rep = lm.check_twisted(L)
    if not ok:
        raise ValidationError(f"loop is not twisted (defect {rep['defect']:.3e} at exponent "
                              f"{rep['worst_exponent']})", defect=rep["defect"])
    res = iwasawa(lm._trusted(L.coeffs, L.lo, True), n_trunc, tol)
    out_dir = Path(out_dir) if out_dir else loop_path.parent
    f_path = out_dir / f"{loop_path.stem}.F.txt"
    b_path = out_dir / f"{loop_path.stem}.B.txt"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        f_path.write_text("# unitary factor\n" + format_loop(res.unitary_part, 1e-300))
        b_path.write_text("# positive factor, constant term diag(rho, 1/rho)\n" + format_loop(res.plus_part, 1e-300))
    except OSError as exc:
        raise InputError(f"cannot write factor files: {exc}") from exc
    print(f"rho {res.rho:.17g}", file=stream)
    print(f"residual {res.residual:.3e}", file=stream)
    print(f"unitary_factor {f_path}", file=stream)
    print(f"positive_factor {b_path}", file=stream)
    return {"rho": res.rho, "residual": res.residual, "F": f_path, "B": b_path}


# ------------------------------------------------------------------ verbs

def _summary(report: RunReport, stream) -> None:
    for o in report.oracles:
        d = o.as_dict()
        val = "" if o.value is None else f" {o.value:.3e}"
        tol = "" if o.tolerance is None else f" (tol {o.tolerance:g})"
        print(f"{d['status']:7s} {o.name}{val}{tol}", file=stream)
    for c in report.singularities:
        print(f"singularity {c.label.value} at {c.location}", file=stream)


def _cmd_solve(args, write_mesh=True):
    job = load_config(args.config)
    report = run_job(job, write_mesh=write_mesh)
    _summary(report, sys.stdout)
    if job.report is None:
        sys.stdout.write(report.to_json())
    return report.exit_code


def _cmd_verify(args):
    return _cmd_solve(args, write_mesh=False)


def _cmd_classify(args):
    job = load_config(args.config)
    labels, extra = classify(job)
    out = {"singularities": [c.as_dict() for c in labels], **extra}
    if job.data.get("warnings"):
        out["admissibility_warnings"] = job.data["warnings"]
    sys.stdout.write(json.dumps(_plain(out), indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_factorize(args):
    factorize_cmd(args.loopfile, args.out_dir, args.n_trunc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spherical-dpw",
                                description="Spherical frontals and CMC surfaces via the DPW method.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="verb", required=True)
    s = sub.add_parser("solve", help="run a job: mesh, report and oracles")
    s.add_argument("config")
    s.set_defaults(func=_cmd_solve)
    s = sub.add_parser("verify", help="run the oracles of a job without writing a mesh")
    s.add_argument("config")
    s.set_defaults(func=_cmd_verify)
    s = sub.add_parser("classify", help="classify singularities from the job's curve data")
    s.add_argument("config")
    s.set_defaults(func=_cmd_classify)
    s = sub.add_parser("factorize", help="Iwasawa-factor a loop coefficient file")
    s.add_argument("loopfile")
    s.add_argument("--out-dir", default=None)
    s.add_argument("--n-trunc", type=int, default=lm.DEFAULT_N_TRUNC)
    s.set_defaults(func=_cmd_factorize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DPWError as exc:
        kind = "input error" if isinstance(exc, InputError) else "numerical failure"
        print(f"spherical-dpw: {kind}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
