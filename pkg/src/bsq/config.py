"""Flat ``key=value`` run configuration: parsing, validation and canonical serialization."""

from __future__ import annotations

import math
from dataclasses import dataclass

from bsq.dynamics import SYSTEMS, ForcingSpec, StepperConfig, SystemSpec
from bsq.errors import BsqError
from bsq.spectral import GridSpec

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ConfigIssue:
    line: object  # int line number, "override N", or None for cross-key rules
    key: str
    message: str

    def __str__(self):
        where = f"line {self.line}" if isinstance(self.line, int) else (self.line or "config")
        return f"{where}: {self.key}: {self.message}"


class ConfigError(BsqError):
    """Every problem found in a configuration, not just the first."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(text):
    return int(text, 10)


def _auto_or(conv):
    def parse(text):
        return "auto" if text == "auto" else conv(text)
    return parse


def _int_list(text):
    return tuple(int(p) for p in text.split(","))


def _str(text):
    if not text:
        raise ValueError("must not be empty")
    return text


# key -> (parser, default). None defaults are filled in by _resolve_defaults.
SCHEMA = {
    "schema_version": (_int, SCHEMA_VERSION),
    "system": (_str, "B_nu_0"),
    "nu": (_float, None),
    "kappa": (_float, None),
    "forcing": (_str, "unit_vector_en"),
    "grid.dim": (_int, 2),
    "grid.n": (_int, 64),
    "R": (_float, None),
    "s": (_float, 3.0),
    "scheme": (_str, "auto"),
    "dt": (_auto_or(_float), "auto"),
    "cfl_safety": (_float, 0.5),
    "dt_max": (_float, 0.01),
    "t_end": (_float, 1.0),
    "seed": (_int, 0),
    "ic.kind": (_str, "taylor_green"),
    "ic.amplitude": (_float, 1.0),
    "ic.theta_amplitude": (_float, 1.0),
    "ic.decay_p": (_float, 4.0),
    "ic.k": (_int_list, (1, 0)),
    "diagnostics.every": (_int, 10),
    "bmo.max_depth": (_auto_or(_int), "auto"),
    "blowup.ceiling": (_float, 1e6),
    "probe.draws": (_int, 32),
    "probe.resolutions": (_int_list, (32, 64)),
    "probe.s": (_float, 2.0),
    "probe.band": (_float, 8.0),
    "output.dir": (_str, "bsq_out"),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    # -- typed views -------------------------------------------------------
    @property
    def grid(self) -> GridSpec:
        return GridSpec(self["grid.dim"], self["grid.n"])

    def forcing(self) -> ForcingSpec:
        return ForcingSpec(self["forcing"])

    @property
    def spec(self) -> SystemSpec:
        return SystemSpec(self["nu"], self["kappa"], self.forcing(), self["R"], self["s"])

    @property
    def stepper(self) -> StepperConfig:
        dt = None if self["dt"] == "auto" else self["dt"]
        return StepperConfig(self["scheme"], dt, self["cfl_safety"], self["dt_max"])

    @property
    def ic(self) -> dict:
        return {
            "kind": self["ic.kind"],
            "amplitude": self["ic.amplitude"],
            "theta_amplitude": self["ic.theta_amplitude"],
            "k": self["ic.k"],
            "decay_p": self["ic.decay_p"],
            "seed": self["seed"],
        }

    @property
    def bmo_depth(self):
        d = self["bmo.max_depth"]
        return None if d == "auto" else d

    def serialize(self) -> str:
        return "".join(f"{k}={_format(self.values[k])}\n" for k in SCHEMA)

    def with_overrides(self, **kw) -> "RunConfig":
        vals = dict(self.values)
        vals.update(kw)
        return RunConfig(vals)


def _format(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse and validate; raises :class:`ConfigError` listing every issue."""
    issues = []
    raw = {}
    where = {}
    entries = [(i, line) for i, line in enumerate(text.splitlines(), start=1)]
    entries += [(f"override {j}", o) for j, o in enumerate(overrides, start=1)]
    for lineno, line in entries:
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            issues.append(ConfigIssue(lineno, stripped, "expected key=value"))
            continue
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in SCHEMA:
            issues.append(ConfigIssue(lineno, key, "unknown key"))
            continue
        if key in raw and not str(lineno).startswith("override"):
            issues.append(ConfigIssue(lineno, key, f"duplicate key (first set on line {where[key]})"))
            continue
        conv = SCHEMA[key][0]
        try:
            raw[key] = conv(value)
        except ValueError as exc:
            issues.append(ConfigIssue(lineno, key, f"type mismatch: cannot parse {value!r} ({exc})"))
            continue
        where[key] = lineno

    values = {k: raw.get(k, d) for k, (_, d) in SCHEMA.items()}
    _resolve_defaults(values, raw, issues, where)
    _validate(values, issues, where)
    if issues:
        raise ConfigError(issues)
    return RunConfig(values)


def _resolve_defaults(values, raw, issues, where):
    system = values["system"]
    if "nu" not in raw:
        values["nu"] = 0.01 if system in ("B_nu_0", "full") else 0.0
    if "kappa" not in raw:
        values["kappa"] = 0.01 if system in ("B_0_kappa", "full") else 0.0
    if "R" not in raw:
        n = values["grid.n"]
        values["R"] = float(n // 3) if isinstance(n, int) and n > 0 else 1.0
    if "ic.k" not in raw and isinstance(values["grid.dim"], int) and values["grid.dim"] == 3:
        values["ic.k"] = (1, 0, 0)


def _validate(v, issues, where):
    def bad(key, msg):
        issues.append(ConfigIssue(where.get(key), key, f"constraint violation: {msg}"))

    if v["schema_version"] != SCHEMA_VERSION:
        bad("schema_version", f"must equal {SCHEMA_VERSION}")
    if v["system"] not in SYSTEMS:
        bad("system", f"must be one of {', '.join(SYSTEMS)}")
    if v["nu"] < 0:
        bad("nu", "must satisfy nu >= 0")
    if v["kappa"] < 0:
        bad("kappa", "must satisfy kappa >= 0")
    if v["system"] in SYSTEMS and v["nu"] >= 0 and v["kappa"] >= 0:
        want_nu = v["system"] in ("B_nu_0", "full")
        want_kappa = v["system"] in ("B_0_kappa", "full")
        if want_nu != (v["nu"] > 0):
            bad("nu", f"system {v['system']} requires nu {'> 0' if want_nu else '= 0'}")
        if want_kappa != (v["kappa"] > 0):
            bad("kappa", f"system {v['system']} requires kappa {'> 0' if want_kappa else '= 0'}")
    if v["forcing"] not in ("unit_vector_en", "zero"):
        bad("forcing", "must be unit_vector_en or zero")
    dim, n = v["grid.dim"], v["grid.n"]
    if dim not in (2, 3):
        bad("grid.dim", "must be 2 or 3")
    if n < 8 or n & (n - 1):
        bad("grid.n", "must be a power of two >= 8")
    elif not (0 < v["R"] <= n / 3):
        bad("R", f"must satisfy 0 < R <= grid.n/3 = {n / 3:.4g}")
    if v["s"] <= 0:
        bad("s", "must be positive")
    if v["scheme"] not in ("auto", "rk4", "rk4_if"):
        bad("scheme", "must be auto, rk4 or rk4_if")
    if v["dt"] != "auto" and not v["dt"] > 0:
        bad("dt", "must be positive or auto")
    if not 0 < v["cfl_safety"] <= 1:
        bad("cfl_safety", "must lie in (0, 1]")
    if not v["dt_max"] > 0:
        bad("dt_max", "must be positive")
    if v["t_end"] < 0:
        bad("t_end", "must be >= 0")
    if not 0 <= v["seed"] < 2**64:
        bad("seed", "must be an unsigned 64-bit integer")
    if v["ic.kind"] not in ("taylor_green", "single_mode", "random_spectrum"):
        bad("ic.kind", "must be taylor_green, single_mode or random_spectrum")
    if v["ic.amplitude"] < 0 or v["ic.theta_amplitude"] < 0:
        bad("ic.amplitude", "amplitudes must be >= 0")
    if v["ic.decay_p"] <= 0:
        bad("ic.decay_p", "must be positive")
    if dim in (2, 3) and len(v["ic.k"]) != dim:
        bad("ic.k", f"must have {dim} components")
    if v["diagnostics.every"] < 1:
        bad("diagnostics.every", "must be >= 1")
    d = v["bmo.max_depth"]
    if d != "auto" and (d < 0 or (n >= 8 and not n & (n - 1) and n % (1 << d))):
        bad("bmo.max_depth", "cubes must align with the grid")
    if not v["blowup.ceiling"] > 0:
        bad("blowup.ceiling", "must be positive")
    if v["probe.draws"] < 1:
        bad("probe.draws", "must be >= 1")
    if v["probe.s"] <= (dim if dim in (2, 3) else 2) / 2:
        bad("probe.s", "must exceed n/2")
    if not all(r >= 8 and not r & (r - 1) and v["probe.band"] <= r / 2 - 1 for r in v["probe.resolutions"]):
        bad("probe.resolutions", "each must be a power of two resolving probe.band")
