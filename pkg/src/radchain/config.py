"""Run configuration: a flat ``key = value`` text file.

Lines starting with ``#`` are comments. Unknown keys are rejected so that
typos do not silently fall back to defaults. ``eps0 = auto`` places the level
shift 0.5 above the strong admissibility bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chain import ChainSpec
from .errors import ConfigError
from .field import FieldParams, FormFactorProfile, GridSettings, admissible_eps0

__all__ = ["RunConfig", "parse_config_text", "load_config", "DEFAULT_CONFIG_TEXT"]

DEFAULT_CONFIG_TEXT = """\
# chain
N = 6
# field / continuum
a = 1.0
b = 1.0
eps0 = auto
v = 1.0
alpha = 0.2
delta = 0.3
grid.nodes = 2048
grid.eps_max_tail = 1e-12
# time window
t_min = 0
t_max = 240
samples = 2401
route = fourier
seed = 0
# subcommand specifics
infinite.j = 4
infinite.t_min = 50
infinite.t_max = 500
infinite.samples = 2000
fit.windows = 20:60, 60:120, 120:240
resolvent.n = 5
resolvent.m = 5
resolvent.p_min = -5
resolvent.p_max = 10
resolvent.samples = 3001
radiate.m = 0
"""

_FLOAT_KEYS = {"a", "b", "v", "alpha", "delta", "grid.eps_max_tail", "t_min", "t_max",
               "infinite.t_min", "infinite.t_max", "resolvent.p_min", "resolvent.p_max"}
_INT_KEYS = {"N", "grid.nodes", "samples", "seed", "infinite.samples", "resolvent.n",
             "resolvent.m", "resolvent.samples", "radiate.m"}
_OTHER_KEYS = {"eps0", "route", "infinite.j", "fit.windows", "output"}
_ROUTES = ("fourier", "discretized", "both")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into a dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FLOAT_KEYS | _INT_KEYS | _OTHER_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _num(raw, key, kind):
    try:
        val = kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None
    if kind is float and not np.isfinite(val):
        raise ConfigError(f"{key}: must be finite")
    return val


def _windows(raw):
    out = []
    for part in filter(None, (s.strip() for s in raw.split(","))):
        try:
            lo, hi = (float(x) for x in part.split(":"))
        except ValueError:
            raise ConfigError(f"fit.windows: bad window {part!r} (want lo:hi)") from None
        if not 0 < lo < hi:
            raise ConfigError(f"fit.windows: need 0 < lo < hi, got {part!r}")
        out.append((lo, hi))
    return tuple(out)


@dataclass(frozen=True)
class RunConfig:
    chain: ChainSpec
    field: FieldParams
    t_min: float = 0.0
    t_max: float = 240.0
    samples: int = 2401
    route: str = "fourier"
    seed: int = 0
    output: str | None = None
    infinite_j: tuple = (4,)
    infinite_window: tuple = (50.0, 500.0, 2000)
    fit_windows: tuple = ((20.0, 60.0), (60.0, 120.0), (120.0, 240.0))
    resolvent_nm: tuple = (5, 5)
    resolvent_window: tuple = (-5.0, 10.0, 3001)
    radiate_m: int = 0
    eps0_auto: bool = True
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.route not in _ROUTES:
            raise ConfigError(f"route must be one of {_ROUTES}, got {self.route!r}")
        if not 0 <= self.t_min < self.t_max:
            raise ConfigError("need 0 <= t_min < t_max")
        if self.samples < 2:
            raise ConfigError("samples must be >= 2")
        lo, hi, n = self.resolvent_window
        if not lo < hi or n < 2:
            raise ConfigError("resolvent window needs p_min < p_max and samples >= 2")
        lo, hi, n = self.infinite_window
        if not 0 <= lo < hi or n < 2:
            raise ConfigError("infinite window needs 0 <= t_min < t_max and samples >= 2")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.samples)

    @classmethod
    def from_mapping(cls, raw: dict) -> "RunConfig":
        merged = parse_config_text(DEFAULT_CONFIG_TEXT)
        merged.update(raw)
        g = {k: _num(merged[k], k, float) for k in _FLOAT_KEYS if k in merged}
        i = {k: _num(merged[k], k, int) for k in _INT_KEYS if k in merged}
        try:
            chain = ChainSpec(i["N"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        profile = FormFactorProfile(alpha=g["alpha"], delta=g["delta"])
        grid = GridSettings(nodes=i["grid.nodes"], eps_max_tail=g["grid.eps_max_tail"])
        eps0_raw = merged["eps0"].strip().lower()
        auto = eps0_raw == "auto"
        try:
            fp = FieldParams(a=g["a"], b=g["b"], v=g["v"], profile=profile, grid=grid,
                             eps0=4.5 if auto else _num(eps0_raw, "eps0", float))
            if auto:
                fp = fp.replace(eps0=admissible_eps0(fp))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None
        js = tuple(_num(s.strip(), "infinite.j", int) for s in merged["infinite.j"].split(",") if s.strip())
        if not js:
            raise ConfigError("infinite.j must list at least one site")
        if any(j < 1 for j in js):
            raise ConfigError("infinite.j sites are one-based (>= 1)")
        for key in ("resolvent.n", "resolvent.m", "radiate.m"):
            if not 0 <= i[key] < chain.N:
                raise ConfigError(f"{key} must lie in [0, {chain.N - 1}]")
        return cls(
            chain=chain, field=fp, t_min=g["t_min"], t_max=g["t_max"], samples=i["samples"],
            route=merged["route"].strip().lower(), seed=i["seed"], output=merged.get("output"),
            infinite_j=js,
            infinite_window=(g["infinite.t_min"], g["infinite.t_max"], i["infinite.samples"]),
            fit_windows=_windows(merged["fit.windows"]),
            resolvent_nm=(i["resolvent.n"], i["resolvent.m"]),
            resolvent_window=(g["resolvent.p_min"], g["resolvent.p_max"], i["resolvent.samples"]),
            radiate_m=i["radiate.m"], eps0_auto=auto, raw=dict(merged),
        )

    def snapshot(self) -> dict:
        """Resolved parameters, for embedding in every output file."""
        fp = self.field
        return {
            "N": self.chain.N, "a": fp.a, "b": fp.b, "eps0": fp.eps0, "eps0_auto": self.eps0_auto,
            "v": fp.v, "alpha": fp.profile.alpha, "delta": fp.profile.delta,
            "grid.nodes": fp.grid.nodes, "grid.eps_max_tail": fp.grid.eps_max_tail,
            "t_min": self.t_min, "t_max": self.t_max, "samples": self.samples,
            "route": self.route, "seed": self.seed,
        }


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read a config file (or defaults when ``path`` is None) into a RunConfig."""
    raw = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
        raw = parse_config_text(text, str(p))
    raw.update(overrides or {})
    return RunConfig.from_mapping(raw)
