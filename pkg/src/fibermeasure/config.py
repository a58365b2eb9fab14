"""Experiment configuration: flat INI sections parsed with configparser.

Every key is declared once in KEYS (section, key, type, default, help);
the config-reference subcommand prints that table.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .errors import ConfigError, ParseError
from .poly import PolyMap
from .residues import make_ring

KEYS = [
    ("field", "spec", "str", "padic:p=5,N=24",
     "backend: padic:p=P,N=DIGITS | laurent:p=P,N=DIGITS[,e=E] | real"),
    ("map", "polys", "list", "", "polynomials in x0..x(m-1), separated by ';' or newlines"),
    ("map", "m", "int", "", "number of variables (default: inferred from the polynomials)"),
    ("value", "c", "list", "0", "target value, comma-separated rationals (one per component)"),
    ("region", "t", "int", "0", "ultrametric ball radius exponent: |x| <= q^t"),
    ("region", "inner", "int", "", "ultrametric annulus: q^inner < |x| <= q^t"),
    ("region", "t_max", "int", "3", "largest radius exponent for growth series and probes"),
    ("region", "radius", "float", "1.0", "real backend: max-norm radius"),
    ("region", "inner_radius", "float", "", "real backend: inner radius of an annulus"),
    ("depth", "seed_depth", "int", "1", "initial y-cell depth of the measure engine"),
    ("depth", "depth", "int", "8", "working depth N (cells mod P^N)"),
    ("depth", "guard", "int", "0", "extra certificate margin: require v(d_J) < N - guard"),
    ("depth", "tolerance", "str", "", "largest acceptable unresolved-mass bound (rational)"),
    ("depth", "budget", "int", "5000000", "node/residue budget before BudgetExceeded"),
    ("sampling", "samples", "int", "20000", "samples per chart (real) or per radius (probes)"),
    ("sampling", "seed", "int", "0", "random seed"),
    ("probe", "point", "list", "", "point for lift/dist, comma-separated rationals"),
    ("probe", "chart", "list", "", "chart J for lift, comma-separated variable indices"),
    ("probe", "target", "int", "20", "Hensel target precision in digits"),
    ("probe", "s", "int", "0", "stability ball: |c' - c| < q^-s"),
    ("probe", "window", "int", "1", "gradient bound: perturb c within q^-window"),
    ("probe", "alpha", "float", "", "temperedness weight (1 + |x|^2)^-alpha for growth"),
    ("probe", "icp", "list", "1,0,0,0,0", "coefficients a0..a4 of P4 for icp"),
    ("probe", "degree", "int", "2", "extension degree r for normform"),
    ("probe", "truncations", "list", "4,6,8", "truncation depths N for deligne"),
    ("probe", "witness", "str", "", "gradbound (real): 'remark' adds the n^(1/3) witness points"),
    ("check", "expect", "str", "", "expected value (exact for ultrametric, else float); deligne: pass"),
    ("check", "expect_tolerance", "float", "0", "absolute tolerance for float comparisons"),
    ("check", "expect_slope", "float", "", "expected growth slope"),
    ("check", "slope_tolerance", "float", "0.1", "allowed slope deviation"),
    ("check", "expect_label", "str", "", "expected icp label"),
    ("run", "threads", "int", "1", "worker processes for independent pieces (spheres, criteria)"),
    ("output", "json", "str", "", "write the JSON report here (default: stdout)"),
    ("output", "csv_dir", "str", "", "directory for CSV tables"),
]

_TYPES = {(s, k): t for s, k, t, _, _ in KEYS}


def config_reference() -> str:
    lines = ["# fibermeasure configuration keys", ""]
    section = None
    for s, k, t, d, h in KEYS:
        if s != section:
            lines += ["", f"[{s}]"]
            section = s
        lines.append(f"{k} = {d}    # {t}: {h}")
    return "\n".join(lines).strip() + "\n"


def parse_field(spec: str) -> dict:
    """'padic:p=5,N=24' -> {'kind': 'padic', 'p': 5, 'N': 24}."""
    spec = spec.strip()
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "real":
        if rest.strip():
            raise ConfigError("the real backend takes no parameters")
        return {"kind": "real"}
    if kind not in ("padic", "laurent"):
        raise ConfigError(f"unknown field backend {kind!r}")
    out: dict[str, Any] = {"kind": kind, "N": 24, "e": 1}
    for item in filter(None, (x.strip() for x in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq or key.strip() not in ("p", "N", "e"):
            raise ConfigError(f"bad field parameter {item!r}")
        try:
            out[key.strip()] = int(val)
        except ValueError as exc:
            raise ConfigError(f"field parameter {item!r} is not an integer") from exc
    if "p" not in out:
        raise ConfigError("field spec needs p=")
    p = out["p"]
    if p < 2 or any(p % d == 0 for d in range(2, int(p ** 0.5) + 1)):
        raise ConfigError(f"p = {p} is not prime")
    if out["N"] < 1 or out["e"] < 1:
        raise ConfigError("N and e must be positive")
    if kind == "padic" and out["e"] != 1:
        raise ConfigError("e applies to the laurent backend only")
    return out


def _split_list(text: str) -> list[str]:
    parts = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if chunk:
            parts.append(chunk)
    return parts


def _csv(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    # ---- construction
    @classmethod
    def defaults(cls) -> "ExperimentConfig":
        return cls({(s, k): d for s, k, _, d, _ in KEYS})

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_parser(cp)

    @classmethod
    def from_string(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        return cls.from_parser(cp)

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "ExperimentConfig":
        cfg = cls.defaults()
        for section in cp.sections():
            for key, val in cp.items(section):
                cfg.set(section, key, val)
        return cfg

    def set(self, section: str, key: str, value) -> None:
        if (section, key) not in _TYPES:
            raise ConfigError(f"unknown config key [{section}] {key}")
        self.values[(section, key)] = "" if value is None else str(value).strip()

    def raw(self, section: str, key: str) -> str:
        return self.values.get((section, key), "")

    # ---- typed access
    def get(self, section: str, key: str):
        text = self.raw(section, key)
        t = _TYPES[(section, key)]
        if text == "":
            return None if t != "list" else []
        try:
            if t == "int":
                return int(text)
            if t == "float":
                return float(text)
            if t == "list":
                return _split_list(text) if (section, key) == ("map", "polys") else _csv(text)
            return text
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {text!r} is not a valid {t}") from exc

    # ---- resolved objects
    @property
    def field_spec(self) -> dict:
        return parse_field(self.raw("field", "spec"))

    @property
    def is_real(self) -> bool:
        return self.field_spec["kind"] == "real"

    def ring(self):
        fs = self.field_spec
        if fs["kind"] == "real":
            return "real"
        return make_ring(fs["kind"], fs["p"], fs.get("e", 1))

    def poly_map(self) -> PolyMap:
        polys = self.get("map", "polys")
        if not polys:
            raise ConfigError("[map] polys is empty")
        try:
            return PolyMap.parse(polys, self.get("map", "m"))
        except ParseError as exc:
            raise ConfigError(f"cannot parse polynomial: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def value(self, r: int) -> list:
        items = self.get("value", "c")
        try:
            c = [Fraction(x) for x in items]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value c: {items}") from exc
        if len(c) == 1 and r > 1:
            c = c * r
        if len(c) != r:
            raise ConfigError(f"value c needs {r} components, got {len(c)}")
        return c

    def rationals(self, section: str, key: str) -> list:
        try:
            return [Fraction(x) for x in self.get(section, key)]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"[{section}] {key} must be rationals") from exc

    def ints(self, section: str, key: str) -> list:
        try:
            return [int(x) for x in self.get(section, key)]
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must be integers") from exc

    def validate(self, needs_map: bool = True) -> None:
        """Check every key parses; raises ConfigError before any computation."""
        for (s, k) in list(self.values):
            self.get(s, k)
        self.field_spec
        for key in ("depth", "seed_depth", "samples", "threads", "budget"):
            sect = "run" if key == "threads" else ("sampling" if key == "samples" else "depth")
            v = self.get(sect, key)
            if v is not None and v < (0 if key == "seed_depth" else 1):
                raise ConfigError(f"[{sect}] {key} must be positive")
        if self.raw("depth", "tolerance"):
            try:
                Fraction(self.raw("depth", "tolerance"))
            except ValueError as exc:
                raise ConfigError("[depth] tolerance must be rational") from exc
        if needs_map:
            F = self.poly_map()
            self.value(F.r)

    def resolved(self) -> dict:
        out: dict = {}
        for (s, k), v in sorted(self.values.items()):
            out.setdefault(s, {})[k] = v
        return out
