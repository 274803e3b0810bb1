"""Run configuration files.

A config is a flat list of ``key = value`` lines (``#`` comments).  The mass
profile is given in the profile grammar, e.g. ``profile = sinusoidal(1, 0.01)``.
Sweep files add ``sweep.<key> = v1, v2, ...`` lines; ``sweep.profile`` takes
``;``-separated profile specs and ``sweep.m0`` / ``sweep.lambda`` substitute
into a sinusoidal (``m0`` also constant) base profile.
"""

from __future__ import annotations

import configparser
import enum
import itertools
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import Convention, ICMode, ScenarioParams
from .errors import ConfigError
from .operators import Scheme
from .oscillation import ClosedFormMode, MixingConfig
from .profiles import MassProfile, ProfileKind, parse_profile_spec
from .spatial import Box, SpatialAnsatz, ZProfile

__all__ = [
    "Solver",
    "RunConfig",
    "AlgebraConfig",
    "parse_number",
    "read_pairs",
    "run_config_from_pairs",
    "load_run_config",
    "load_sweep",
    "resolve_row",
    "load_algebra_config",
    "load_ansatz_config",
    "MAX_SWEEP_ROWS",
]

MAX_SWEEP_ROWS = 1_000_000
_SECTION = "run"
_PI_RE = re.compile(r"^\s*([-+]?[\d.]*(?:e[-+]?\d+)?)\s*\*?\s*pi\s*(?:/\s*([\d.]+(?:e[-+]?\d+)?))?\s*$",
                    re.IGNORECASE)


class Solver(enum.Enum):
    COUPLED = "coupled"
    SECOND_ORDER = "second_order"
    RICCATI = "riccati"


def parse_number(text: str) -> float:
    """Float literal, or a multiple/fraction of ``pi`` such as ``pi/4`` or ``2*pi``."""
    text = str(text).strip()
    try:
        return float(text)
    except ValueError:
        pass
    match = _PI_RE.match(text)
    if not match:
        raise ConfigError(f"not a number: {text!r}")
    coef = match.group(1)
    coef = -1.0 if coef == "-" else 1.0 if coef in ("", "+") else float(coef)
    denom = float(match.group(2)) if match.group(2) else 1.0
    return coef * math.pi / denom


def read_pairs(path) -> dict[str, str]:
    """Read ``key = value`` lines into a dict (keys lower-cased, values stripped)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#",), inline_comment_prefixes=("#",))
    try:
        parser.read_string(f"[{_SECTION}]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return dict(parser[_SECTION])


@dataclass(frozen=True)
class RunConfig:
    profile: MassProfile
    k: float
    theta: float = math.pi / 4
    scenario: str = "scenario"
    convention: Convention = Convention.PHYSICAL
    ic_mode: ICMode = ICMode.UNIT_PAIR
    t_span: tuple[float, float] = (0.0, 1.0)
    samples: int = 2001
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    solver: Solver = Solver.COUPLED
    closed_form: ClosedFormMode | None = None
    output_format: str = "csv"
    output: str | None = None
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        MixingConfig(self.theta)
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        # reuse the solver-side validation for k, t_span and tolerances
        self.scenario_params()

    def scenario_params(self) -> ScenarioParams:
        return ScenarioParams(self.profile, self.k, self.t_span, self.convention, self.ic_mode,
                              self.rel_tol, self.abs_tol, self.samples)

    @property
    def probability_source(self) -> str:
        return "pipeline" if self.closed_form is None else f"closed_form({self.closed_form.value})"

    def describe(self) -> dict:
        return {
            "scenario": self.scenario,
            "profile": self.profile.spec(),
            "k": self.k,
            "theta": self.theta,
            "convention": self.convention.value,
            "ic_mode": self.ic_mode.value,
            "t_span": list(self.t_span),
            "samples": self.samples,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "solver": self.solver.value,
            "probability_source": self.probability_source,
        }


_RUN_KEYS = {"scenario", "profile", "k", "theta", "sin2_2theta", "convention", "ic_mode",
             "t_start", "t_end", "t_span", "samples", "rel_tol", "abs_tol", "solver",
             "probability_source", "format", "output"}


def _enum_value(enum_cls, text: str, key: str):
    wanted = text.strip().lower().replace("_", "")
    for member in enum_cls:
        if member.value.lower().replace("_", "") == wanted or member.name.lower().replace("_", "") == wanted:
            return member
    choices = ", ".join(m.value for m in enum_cls)
    raise ConfigError(f"{key}: {text!r} is not one of {choices}")


def _probability_source(text: str):
    text = text.strip()
    if text.lower() == "pipeline":
        return None
    match = re.fullmatch(r"closed_form\s*\(\s*(\w+)\s*\)", text, re.IGNORECASE)
    if not match:
        raise ConfigError(f"probability_source: expected pipeline or closed_form(mode), got {text!r}")
    return _enum_value(ClosedFormMode, match.group(1), "probability_source")


def _int(text: str, key: str) -> int:
    try:
        value = float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {text!r}") from exc
    if value != int(value):
        raise ConfigError(f"{key}: not an integer: {text!r}")
    return int(value)


def run_config_from_pairs(pairs: dict[str, str], base_dir=None) -> RunConfig:
    """Build a :class:`RunConfig`; every problem is raised as :class:`ConfigError`."""
    unknown = set(pairs) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("profile", "k"):
        if key not in pairs:
            raise ConfigError(f"missing required key {key!r}")
    if "theta" in pairs and "sin2_2theta" in pairs:
        raise ConfigError("give theta or sin2_2theta, not both")
    try:
        profile = parse_profile_spec(pairs["profile"], base_dir)
        if "sin2_2theta" in pairs:
            theta = MixingConfig.from_sin2_2theta(parse_number(pairs["sin2_2theta"])).theta
        else:
            theta = parse_number(pairs.get("theta", "pi/4"))
        if "t_span" in pairs:
            parts = [p for p in pairs["t_span"].split(",") if p.strip()]
            if len(parts) != 2:
                raise ConfigError("t_span needs two values")
            t_span = (parse_number(parts[0]), parse_number(parts[1]))
        else:
            lo, hi = profile.domain
            t0 = parse_number(pairs["t_start"]) if "t_start" in pairs else (lo if math.isfinite(lo) else 0.0)
            t1 = parse_number(pairs["t_end"]) if "t_end" in pairs else (hi if math.isfinite(hi) else 1.0)
            t_span = (t0, t1)
        return RunConfig(
            profile=profile,
            k=parse_number(pairs["k"]),
            theta=theta,
            scenario=pairs.get("scenario", "scenario"),
            convention=_enum_value(Convention, pairs.get("convention", "Physical"), "convention"),
            ic_mode=_enum_value(ICMode, pairs.get("ic_mode", "UnitPair"), "ic_mode"),
            t_span=t_span,
            samples=_int(pairs.get("samples", "2001"), "samples"),
            rel_tol=parse_number(pairs.get("rel_tol", "1e-9")),
            abs_tol=parse_number(pairs.get("abs_tol", "1e-12")),
            solver=_enum_value(Solver, pairs.get("solver", "coupled"), "solver"),
            closed_form=_probability_source(pairs.get("probability_source", "pipeline")),
            output_format=pairs.get("format", "csv").strip().lower(),
            output=pairs.get("output"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        # DomainError and other validation failures raised by the library
        raise ConfigError(str(exc)) from exc


def load_run_config(path) -> RunConfig:
    path = Path(path)
    return run_config_from_pairs(read_pairs(path), path.parent)


def _substitute_profile(spec: str, m0=None, lam=None) -> str:
    profile = parse_profile_spec(spec)
    if profile.kind is ProfileKind.SINUSOIDAL:
        return f"sinusoidal({m0 if m0 is not None else profile.m0!r}, " \
               f"{lam if lam is not None else profile.lam!r})"
    if profile.kind is ProfileKind.CONSTANT and lam is None:
        return f"constant({m0 if m0 is not None else profile.m0!r})"
    raise ConfigError(f"cannot substitute m0/lambda into {spec!r}")


def load_sweep(path):
    """Return ``(names, rows, base, base_dir)``; each row is ``(values, pairs)``.

    Rows follow the Cartesian product of the sweep lists with the parameter
    names sorted alphabetically, i.e. lexicographic order of value indices.
    Row pairs are not validated here; invalid rows surface when built.
    """
    path = Path(path)
    pairs = read_pairs(path)
    sweeps = {}
    base = {}
    for key, value in pairs.items():
        if key.startswith("sweep."):
            name = key[len("sweep."):]
            sep = ";" if name == "profile" else ","
            values = [v.strip() for v in value.split(sep) if v.strip()]
            if not values:
                raise ConfigError(f"{key} has no values")
            sweeps[name] = values
        else:
            base[key] = value
    if not sweeps:
        raise ConfigError("sweep config has no sweep.<key> lines")
    allowed = (_RUN_KEYS - {"output", "format", "t_span"}) | {"m0", "lambda"}
    bad = set(sweeps) - allowed
    if bad:
        raise ConfigError(f"cannot sweep over {', '.join(sorted(bad))}")
    if "profile" in sweeps and ({"m0", "lambda"} & set(sweeps)):
        raise ConfigError("sweep either the profile spec or m0/lambda, not both")
    names = sorted(sweeps)
    total = math.prod(len(sweeps[n]) for n in names)
    if total > MAX_SWEEP_ROWS:
        raise ConfigError(f"sweep has {total} rows, limit is {MAX_SWEEP_ROWS}")
    rows = []
    for combo in itertools.product(*(sweeps[n] for n in names)):
        row = dict(base)
        subs = {}
        for name, value in zip(names, combo):
            if name in ("m0", "lambda"):
                subs[name] = value
            else:
                row[name] = value
        if subs:
            row["profile"] = ("@subst", row.get("profile", ""), subs.get("m0"), subs.get("lambda"))
        rows.append((combo, row))
    return names, rows, base, path.parent


def resolve_row(row: dict, base_dir=None) -> RunConfig:
    """Turn one sweep row into a validated :class:`RunConfig`."""
    row = dict(row)
    profile = row.get("profile")
    if isinstance(profile, tuple):
        _, spec, m0, lam = profile
        if not spec:
            raise ConfigError("sweeping m0/lambda needs a base profile")
        row["profile"] = _substitute_profile(
            spec, None if m0 is None else parse_number(m0), None if lam is None else parse_number(lam))
    row.pop("output", None)
    row.pop("format", None)
    return run_config_from_pairs(row, base_dir)


@dataclass(frozen=True)
class AlgebraConfig:
    profiles: tuple[MassProfile, ...]
    t_span: tuple[float, float]
    n_points: int = 400
    scheme: Scheme = Scheme.FORWARD
    refinements: int = 4


def load_algebra_config(path) -> AlgebraConfig:
    """Keys: ``profile`` (``;``-separated specs allowed), ``t_start``, ``t_end``,
    ``n_points``, ``scheme``, ``refinements``."""
    path = Path(path)
    pairs = read_pairs(path)
    unknown = set(pairs) - {"profile", "t_start", "t_end", "n_points", "scheme", "refinements"}
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "profile" not in pairs:
        raise ConfigError("missing required key 'profile'")
    try:
        profiles = tuple(parse_profile_spec(s, path.parent) for s in pairs["profile"].split(";") if s.strip())
        lo, hi = profiles[0].domain
        t0 = parse_number(pairs["t_start"]) if "t_start" in pairs else (lo if math.isfinite(lo) else 0.0)
        t1 = parse_number(pairs["t_end"]) if "t_end" in pairs else (hi if math.isfinite(hi) else 1.0)
        for p in profiles:
            p.check_domain([t0, t1])
        cfg = AlgebraConfig(profiles, (t0, t1), _int(pairs.get("n_points", "400"), "n_points"),
                            _enum_value(Scheme, pairs.get("scheme", "forward"), "scheme"),
                            _int(pairs.get("refinements", "4"), "refinements"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.n_points < 8 or cfg.refinements < 2 or not t1 > t0:
        raise ConfigError("need n_points >= 8, refinements >= 2 and t_end > t_start")
    return cfg


_F_RE = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")


def _parse_f(text: str, base_dir) -> ZProfile:
    match = _F_RE.match(text)
    if not match:
        raise ConfigError(f"unparseable f spec {text!r}")
    name, args = match.group(1).lower(), [a.strip() for a in match.group(2).split(",") if a.strip()]
    if name == "constant" and len(args) <= 1:
        return ZProfile.constant(parse_number(args[0]) if args else 1.0)
    if name == "gaussian" and 1 <= len(args) <= 2:
        return ZProfile.gaussian(parse_number(args[0]), parse_number(args[1]) if len(args) > 1 else 0.0)
    if name == "tabulated" and len(args) == 1:
        tab = MassProfile.from_csv(Path(base_dir or ".") / args[0].strip("'\""))
        z, f = zip(*tab.samples)
        return ZProfile.tabulated(z, f)
    raise ConfigError(f"unknown f spec {text!r}")


def _triple(text: str, key: str, cast):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise ConfigError(f"{key} needs one or three values")
    return tuple(cast(p) for p in parts)


def load_ansatz_config(path) -> tuple[SpatialAnsatz, str]:
    """Keys: ``k1``, ``k2``, ``f``, ``lower``, ``upper``, ``counts``, ``method``."""
    path = Path(path)
    pairs = read_pairs(path)
    unknown = set(pairs) - {"k1", "k2", "f", "lower", "upper", "counts", "method"}
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        box = Box(_triple(pairs.get("lower", "0"), "lower", parse_number),
                  _triple(pairs.get("upper", "1"), "upper", parse_number),
                  _triple(pairs.get("counts", "32"), "counts", lambda s: _int(s, "counts")))
        ansatz = SpatialAnsatz(parse_number(pairs.get("k1", "1")), parse_number(pairs.get("k2", "0")),
                               _parse_f(pairs.get("f", "constant(1)"), path.parent), box)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    method = pairs.get("method", "analytic").strip().lower()
    if method not in ("analytic", "fd"):
        raise ConfigError(f"unknown method {method!r}")
    return ansatz, method
