"""Campaign configuration: one dataclass per subcommand, stored as INI sections."""

from __future__ import annotations

import configparser
import dataclasses
import io
import typing
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "ConfigError",
    "MetricBenchConfig",
    "EmbedVerifyConfig",
    "RhoStarConfig",
    "DirichletConfig",
    "CurrentConfig",
    "LipschitzConfig",
    "CompetitorConfig",
    "ReportConfig",
    "CampaignConfig",
    "SECTIONS",
]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass
class MetricBenchConfig:
    q_max: int = 6
    n_max: int = 3
    pairs: int = 500
    axiom_samples: int = 10_000


@dataclass
class EmbedVerifyConfig:
    q: int = 2
    n: int = 1
    lip_pairs: int = 10_000
    roundtrip: int = 1_000
    face_samples: int = 10_000


@dataclass
class RhoStarConfig:
    q: int = 2
    n: int = 1
    mus: tuple = (0.2, 0.1, 0.05, 0.025)
    samples: int = 400
    tube_samples: int = 200
    energy_mu: float = 0.1
    fields: int = 20
    field_size: int = 12


@dataclass
class DirichletConfig:
    resolutions: tuple = (16, 32, 64)
    restarts: int = 5
    holder_s: float = 1.5
    holder_p: float = 3.0
    holder_radii: tuple = (0.1, 0.2)


@dataclass
class CurrentConfig:
    input: str = "flat"
    resolution: int = 32
    bv_graphs: int = 50
    bv_psis: int = 5
    bv_resolution: int = 16
    bv_sub: int = 8
    taylor_eps: tuple = (0.2, 0.1, 0.05)
    stokes_resolutions: tuple = (8, 16, 32, 64)


@dataclass
class LipschitzConfig:
    resolution: int = 128
    amplitude: float = 0.012
    etas: tuple = (0.1, 0.05)


@dataclass
class CompetitorConfig:
    resolution: int = 32
    mu: float = 0.1
    eps: float = 0.125
    radii: tuple = (0.4, 0.6, 0.8)
    amplitude: float = 0.3


@dataclass
class ReportConfig:
    inputs: str = ""


SECTIONS = {
    "metric-bench": ("metric_bench", MetricBenchConfig),
    "embed-verify": ("embed_verify", EmbedVerifyConfig),
    "rho-star-verify": ("rho_star", RhoStarConfig),
    "dirichlet-min": ("dirichlet", DirichletConfig),
    "current-analyze": ("current", CurrentConfig),
    "lipschitz-approx": ("lipschitz", LipschitzConfig),
    "competitor": ("competitor", CompetitorConfig),
    "report": ("report", ReportConfig),
}


@dataclass
class CampaignConfig:
    seed: int = 0
    out: str = "runs"
    suites: tuple = ()
    strict: bool = False
    metric_bench: MetricBenchConfig = field(default_factory=MetricBenchConfig)
    embed_verify: EmbedVerifyConfig = field(default_factory=EmbedVerifyConfig)
    rho_star: RhoStarConfig = field(default_factory=RhoStarConfig)
    dirichlet: DirichletConfig = field(default_factory=DirichletConfig)
    current: CurrentConfig = field(default_factory=CurrentConfig)
    lipschitz: LipschitzConfig = field(default_factory=LipschitzConfig)
    competitor: CompetitorConfig = field(default_factory=CompetitorConfig)
    report: ReportConfig = field(default_factory=ReportConfig)

    def section(self, command: str):
        return getattr(self, SECTIONS[command][0])

    # -- file form --------------------------------------------------------
    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["campaign"] = {f.name: _fmt(getattr(self, f.name)) for f in dataclasses.fields(self) if f.name in _TOP}
        for command, (attr, _) in SECTIONS.items():
            sec = getattr(self, attr)
            cp[command] = {f.name: _fmt(getattr(sec, f.name)) for f in dataclasses.fields(sec)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "CampaignConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        unknown = set(cp.sections()) - set(SECTIONS) - {"campaign"}
        if unknown:
            raise ConfigError(f"unknown sections: {sorted(unknown)}")
        cfg = cls()
        if cp.has_section("campaign"):
            _apply(cfg, cp["campaign"], _TOP)
        for command, (attr, _) in SECTIONS.items():
            if cp.has_section(command):
                sec = getattr(cfg, attr)
                _apply(sec, cp[command], {f.name for f in dataclasses.fields(sec)})
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "CampaignConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        return cls.from_ini(p.read_text())

    def validate(self) -> None:
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        rs = self.rho_star
        if not rs.mus or any(m <= 0 for m in rs.mus):
            raise ConfigError("rho-star-verify.mus must be positive")
        if any(not 0 < e < 1 for e in self.lipschitz.etas):
            raise ConfigError("lipschitz-approx.etas must lie in (0, 1)")
        r = self.competitor.radii
        if len(r) != 3 or not 0 < r[0] < r[1] < r[2]:
            raise ConfigError("competitor.radii must be three increasing positive radii")


_TOP = {"seed", "out", "suites", "strict"}


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _apply(obj, section, allowed: set) -> None:
    hints = typing.get_type_hints(type(obj))
    defaults = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    for key, raw in section.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{section.name}]")
        setattr(obj, key, _parse(raw, hints[key], defaults[key], key))


def _parse(raw: str, hint, default, key: str):
    raw = raw.strip()
    try:
        if hint is bool or hint == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint is tuple:
            if not raw:
                return ()
            items = [x.strip() for x in raw.split(",") if x.strip()]
            kind = type(default[0]) if default else str
            return tuple(kind(x) for x in items)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
