"""Job files: sectioned ``key = value`` text with quoted expressions.

Sections and keys (anything else is rejected)::

    [potential]   kind, expression keys of that kind, interval, period
    [grid]        x_min x_max y_min y_max nx ny basepoint_x basepoint_y
    [numerics]    n_trunc substeps workers iwasawa_tol det_tol cond_floor
                  class_tol reg_floor reg_fraction curvature_tol frontal_tol flatness_tol
                  curve_tol probes
    [output]      mesh report color_field frontal oracles

Expression values are double-quoted; vector values (``f0``, ``N0``) are
three comma-separated quoted expressions.  Numeric values may be constant
expressions such as ``2*pi``.
"""

from __future__ import annotations

import configparser
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path


from . import potentials as pt
from .analytic import AnalyticFn, parse
from .errors import ConfigError, InputError, UnknownIdentifierError
from .factorization import Tolerances
from .frame import GridSpec

KIND_KEYS = {
    "normalized": {"a", "b"},
    "geodesic_gcp": {"kappa", "tau"},
    "general_gcp": {"kappa_n", "kappa_g", "mu", "f0", "N0"},
    "singular_gcp": {"kappa", "tau"},
    "singular_general": {"b", "c"},
    "cone": {"c", "period"},
    "cmc_gcp": {"kappa_n", "kappa_g", "mu", "f0", "N0"},
}
VECTOR_KEYS = {"f0", "N0"}
NUMERIC_POTENTIAL_KEYS = {"period"}
ORACLES = ("iwasawa", "frontal", "curvature", "flatness", "boundary", "curve", "locus")

NUMERICS_DEFAULTS = {
    "n_trunc": 16,
    "substeps": 1,
    "workers": 1,
    "iwasawa_tol": 1e-8,
    "det_tol": 1e-10,
    "cond_floor": 1e-10,
    "class_tol": 1e-9,
    "reg_floor": 1e-3,
    "reg_fraction": 0.2,
    "curvature_tol": 1e-3,
    "frontal_tol": 1e-2,
    "flatness_tol": 1e-8,
    "curve_tol": 1e-5,
    "probes": 8,
}
INT_NUMERICS = {"n_trunc", "substeps", "workers", "probes"}
GRID_KEYS = ("x_min", "x_max", "y_min", "y_max", "nx", "ny", "basepoint_x", "basepoint_y")
OUTPUT_KEYS = ("mesh", "report", "color_field", "frontal", "oracles")
SECTIONS = {
    "potential": None,
    "grid": set(GRID_KEYS),
    "numerics": set(NUMERICS_DEFAULTS),
    "output": set(OUTPUT_KEYS),
}

_QUOTED = re.compile(r'\s*"([^"]*)"\s*')


@dataclass
class JobSpec:
    kind: str
    expressions: dict
    interval: tuple
    period: float | None
    grid: GridSpec
    numerics: dict
    mesh: Path | None
    report: Path | None
    color_field: str
    frontal: str
    oracles: tuple
    potential: pt.Potential = field(repr=False, default=None)
    data: dict = field(repr=False, default_factory=dict)
    source: Path | None = None

    @property
    def tolerances(self) -> Tolerances:
        n = self.numerics
        return Tolerances(n["iwasawa_tol"], n["det_tol"], n["cond_floor"])

    def echo(self) -> dict:
        """Plain-data view of the job with every default filled in."""
        g = self.grid
        return {
            "potential": {"kind": self.kind, **{k: v for k, v in self.expressions.items()},
                          "interval": list(self.interval), "period": self.period},
            "grid": {"x_range": list(g.x_range), "y_range": list(g.y_range), "nx": g.nx, "ny": g.ny,
                     "basepoint": [g.z0.real, g.z0.imag]},
            "numerics": dict(self.numerics),
            "output": {"mesh": str(self.mesh) if self.mesh else None,
                       "report": str(self.report) if self.report else None,
                       "color_field": self.color_field, "frontal": self.frontal,
                       "oracles": list(self.oracles)},
        }


def _key_lines(text: str) -> dict:
    """(section, key) -> 1-based line number, for error messages."""
    out, section = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif "=" in s and not s.startswith(("#", ";")) and section:
            out[(section, s.split("=", 1)[0].strip())] = n
    return out


def _number(value: str, key: str, line) -> float:
    try:
        f = parse(value.strip().strip('"'))
    except InputError as exc:
        raise ConfigError(f"bad number {value!r}: {exc}", key, line) from exc
    if not f.is_constant:
        raise ConfigError(f"{value!r} is not a constant", key, line)
    v = complex(f(0.0))
    if abs(v.imag) > 0:
        raise ConfigError(f"{value!r} is not real", key, line)
    return v.real


def variables_for(kind: str) -> tuple:
    """Accepted variable names: z for normalized potentials, s (or x) for curve data."""
    return ("z",) if kind == "normalized" else ("s", "x")


def _expression(value: str, key: str, line, variables=("s",)) -> tuple[str, AnalyticFn]:
    m = _QUOTED.fullmatch(value)
    if not m:
        raise ConfigError("expression values must be double-quoted", key, line)
    src = m.group(1)
    for var in variables:
        try:
            return src, parse(src, var)
        except UnknownIdentifierError as exc:
            err = exc
            if exc.name in variables and exc.name != var:
                continue  # written in another accepted variable
            break
        except InputError as exc:
            err = exc
            break
    raise ConfigError(f"cannot parse expression {src!r}: {err}", key, line) from err


def _vector(value: str, key: str, line, variables=("s",)):
    parts = re.findall(r'"[^"]*"', value)
    rest = re.sub(r'"[^"]*"', "", value).replace(",", "").strip()
    if len(parts) != 3 or rest:
        raise ConfigError("vector values are three comma-separated quoted expressions", key, line)
    srcs, fns = zip(*(_expression(p, key, line, variables) for p in parts))
    return list(srcs), tuple(fns)


def load_config(path) -> JobSpec:
    """Read and validate a job file; relative output paths resolve against its directory."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads_config(text, base=path.parent, source=path)


def loads_config(text: str, base: Path | None = None, source: Path | None = None) -> JobSpec:
    lines = _key_lines(text)
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=None, interpolation=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line=lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError("duplicate key", f"{exc.section}.{exc.option}", exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", line=exc.lineno) from exc

    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", sec)
    if "potential" not in cp:
        raise ConfigError("missing [potential] section", "potential")

    pot = cp["potential"]
    kind = pot.get("kind", "").strip().strip('"')
    if kind not in KIND_KEYS:
        raise ConfigError(f"unknown potential kind {kind!r}; expected one of {sorted(KIND_KEYS)}",
                          "potential.kind", lines.get(("potential", "kind")))
    allowed = KIND_KEYS[kind] | {"kind", "interval"}
    for key in pot:
        if key not in allowed:
            raise ConfigError(f"unknown key for kind {kind}", f"potential.{key}", lines.get(("potential", key)))

    exprs, fns = {}, {}
    interval = (-1.0, 1.0)
    period = None
    for key, value in pot.items():
        line = lines.get(("potential", key))
        if key == "kind":
            continue
        if key == "interval":
            parts = value.split(",")
            if len(parts) != 2:
                raise ConfigError("interval needs two numbers", "potential.interval", line)
            interval = tuple(_number(p, "potential.interval", line) for p in parts)
            if not interval[1] > interval[0]:
                raise ConfigError("interval must be increasing", "potential.interval", line)
        elif key in NUMERIC_POTENTIAL_KEYS:
            period = _number(value, f"potential.{key}", line)
        elif key in VECTOR_KEYS:
            exprs[key], fns[key] = _vector(value, f"potential.{key}", line, variables_for(kind))
        else:
            exprs[key], fns[key] = _expression(value, f"potential.{key}", line, variables_for(kind))

    grid = _grid(cp, lines, interval)
    numerics = dict(NUMERICS_DEFAULTS)
    if "numerics" in cp:
        for key, value in cp["numerics"].items():
            line = lines.get(("numerics", key))
            if key not in NUMERICS_DEFAULTS:
                raise ConfigError("unknown key", f"numerics.{key}", line)
            v = _number(value, f"numerics.{key}", line)
            if key in INT_NUMERICS:
                if v != int(v) or v < 1:
                    raise ConfigError("expected a positive integer", f"numerics.{key}", line)
                v = int(v)
            elif v <= 0:
                raise ConfigError("expected a positive number", f"numerics.{key}", line)
            numerics[key] = v

    out = cp["output"] if "output" in cp else {}
    for key in out:
        if key not in OUTPUT_KEYS:
            raise ConfigError("unknown key", f"output.{key}", lines.get(("output", key)))
    base = base or Path(".")
    mesh = out.get("mesh")
    report = out.get("report")
    color_field = out.get("color_field", "mu").strip()
    if color_field not in ("mu", "none"):
        raise ConfigError("color_field must be mu or none", "output.color_field", lines.get(("output", "color_field")))
    frontal = out.get("frontal", "cmc" if kind == "cmc_gcp" else "spherical").strip()
    if frontal not in ("spherical", "cmc"):
        raise ConfigError("frontal must be spherical or cmc", "output.frontal", lines.get(("output", "frontal")))
    oracles = _oracles(out.get("oracles", "all"), lines.get(("output", "oracles")))

    spec = JobSpec(kind, exprs, interval, period, grid, numerics,
                   base / mesh.strip().strip('"') if mesh else None,
                   base / report.strip().strip('"') if report else None,
                   color_field, frontal, oracles, source=source)
    spec.potential, spec.data = build_potential(kind, fns, interval, period, lines)
    return spec


def _oracles(value: str, line) -> tuple:
    items = [v.strip() for v in value.split(",") if v.strip()]
    if items == ["all"]:
        return ORACLES
    if items == ["none"]:
        return ()
    for it in items:
        if it not in ORACLES:
            raise ConfigError(f"unknown oracle {it!r}; expected some of {list(ORACLES)}", "output.oracles", line)
    return tuple(it for it in ORACLES if it in items)


def _grid(cp, lines, interval) -> GridSpec:
    g = cp["grid"] if "grid" in cp else {}
    for key in g:
        if key not in GRID_KEYS:
            raise ConfigError("unknown key", f"grid.{key}", lines.get(("grid", key)))
    val = {k: _number(v, f"grid.{k}", lines.get(("grid", k))) for k, v in g.items()}
    for k in ("nx", "ny"):
        if k in val and (val[k] != int(val[k]) or val[k] < 2):
            raise ConfigError("expected an integer >= 2", f"grid.{k}", lines.get(("grid", k)))
    bp = None
    if "basepoint_x" in val or "basepoint_y" in val:
        bx = val.get("basepoint_x", 0.0)
        by = val.get("basepoint_y", 0.0)
        bp = complex(bx, by)
    try:
        return GridSpec((val.get("x_min", interval[0]), val.get("x_max", interval[1])),
                        (val.get("y_min", -1.0), val.get("y_max", 1.0)),
                        int(val.get("nx", 201)), int(val.get("ny", 201)), bp)
    except InputError as exc:
        raise ConfigError(str(exc), "grid") from exc


def build_potential(kind: str, fns: dict, interval, period, lines=None) -> tuple[pt.Potential, dict]:
    """Construct the potential of a job, surfacing admissibility failures as config errors."""
    lines = lines or {}

    def need(*keys):
        missing = [k for k in keys if k not in fns]
        if missing:
            raise ConfigError(f"kind {kind} needs {missing}", f"potential.{missing[0]}")

    data: dict = {}
    try:
        if kind == "normalized":
            need("a", "b")
            pot = pt.normalized(fns["a"], fns["b"])
        elif kind in ("geodesic_gcp", "singular_gcp"):
            need("kappa", "tau")
            ctor = pt.geodesic_gcp if kind == "geodesic_gcp" else pt.singular_gcp
            pot = ctor(fns["kappa"], fns["tau"]) if kind == "geodesic_gcp" else ctor(fns["kappa"], fns["tau"], interval)
        elif kind in ("general_gcp", "cmc_gcp"):
            curve = {"f0", "N0"} & set(fns)
            scalars = {"kappa_n", "kappa_g", "mu"} & set(fns)
            if curve and scalars:
                raise ConfigError("give either f0/N0 or kappa_n/kappa_g/mu, not both", f"potential.{sorted(curve)[0]}")
            if curve:
                need("f0", "N0")
                cd = pt.gcp_data_from_curve(fns["f0"], fns["N0"], interval)
            else:
                need("kappa_n", "kappa_g", "mu")
                cd = pt.cauchy_data("general", interval, kappa_n=fns["kappa_n"], kappa_g=fns["kappa_g"], mu=fns["mu"])
            if kind == "cmc_gcp":
                cd = pt.CauchyData("cmc", cd.functions, cd.interval)
                pot = pt.cmc_gcp(cd)
            else:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    pot = pt.general_gcp(cd)
                data["warnings"] = [str(w.message) for w in caught]
            data["cauchy"] = cd
        elif kind == "singular_general":
            need("b", "c")
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                pot = pt.singular_gcp_general(fns["b"], fns["c"], interval)
            data["warnings"] = [str(w.message) for w in caught]
        elif kind == "cone":
            need("c")
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                pot, rep = pt.cone_potential_from_normal_curve(fns["c"], period, interval)
            data["cone"] = rep
            data["warnings"] = [str(w.message) for w in caught]
        else:  # pragma: no cover - guarded by KIND_KEYS
            raise ConfigError(f"unknown kind {kind}", "potential.kind")
    except ConfigError:
        raise
    except InputError as exc:
        raise ConfigError(f"inadmissible {kind} data: {exc}", "potential",
                          lines.get(("potential", "kind"))) from exc
    return pot, data
