"""Scenario files: INI text with typed sections.

Example::

    [bath]
    kind = nn            ; nn | nnn
    xi = 0.2
    xi_prime = 0.0
    n_modes = 1201
    omega_c = 1.0

    [emitters]
    omega0 = 1.0
    g = 0.05
    reference_site = 1   ; site of emitter 2
    separations = 0, 1, 2, 3, 4, 5

    [run]
    outputs = all        ; criterion, boundstate, markovian, dynamics, oracle, all
    horizon = 2000
    step = 0.02
    method = coupled     ; coupled | decoupled
    csv_stride = 10

    [output]
    directory = out/fig2a

    [tolerances]
    step_tol = 1e-6
    window_fraction = 0.1
    oracle_weight_factor = 10
    oracle_n_modes = 301
    oracle_horizon = 300

Instead of ``separations`` a single pair may be given by ``site1`` and
``site2``. Every key is optional except that the emitter placement must
produce at least one pair.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bath import BathKind, BathModel
from .emitters import EmitterPair
from .errors import ValidationError

OUTPUT_KINDS = ("criterion", "boundstate", "markovian", "dynamics", "oracle")
SECTIONS = ("bath", "emitters", "run", "output", "tolerances")
KEYS = {
    "bath": {"kind", "xi", "xi_prime", "n_modes", "omega_c"},
    "emitters": {"omega0", "g", "reference_site", "separations", "site1", "site2"},
    "run": {"outputs", "horizon", "step", "method", "csv_stride"},
    "output": {"directory"},
    "tolerances": {"step_tol", "window_fraction", "oracle_weight_factor", "oracle_n_modes",
                   "oracle_horizon"},
}


class ScenarioParseError(Exception):
    """The scenario file is missing or not valid INI with typed values."""


@dataclass(frozen=True)
class Tolerances:
    step_tol: float = 1e-6
    window_fraction: float = 0.1
    oracle_weight_factor: float = 10.0
    oracle_n_modes: int = 301
    oracle_horizon: float = 300.0


@dataclass(frozen=True)
class Scenario:
    bath: BathModel
    pairs: tuple[EmitterPair, ...]
    outputs: tuple[str, ...] = OUTPUT_KINDS
    horizon: float | None = 2000.0
    step: float = 0.02
    method: str = "coupled"
    csv_stride: int = 10
    out_dir: Path = Path("out")
    tolerances: Tolerances = field(default_factory=Tolerances)
    source: str = ""

    def with_overrides(self, horizon=None, step=None, out_dir=None) -> "Scenario":
        upd = {}
        if horizon is not None:
            upd["horizon"] = _positive("horizon", horizon)
        if step is not None:
            upd["step"] = _positive("step", step)
        if out_dir is not None:
            upd["out_dir"] = Path(out_dir)
        return replace(self, **upd)


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive, got {value}")
    return value


def _get(section, key, conv, default):
    if section is None or key not in section:
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except ValueError as exc:
        raise ScenarioParseError(f"[{section.name}] {key} = {raw!r}: {exc}") from None


def _int_list(raw: str) -> list[int]:
    items = [s.strip() for s in raw.replace(";", ",").split(",")]
    return [int(s) for s in items if s]


def _word_list(raw: str) -> list[str]:
    return [s.strip().lower() for s in raw.split(",") if s.strip()]


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    Raises :class:`ScenarioParseError` for unreadable or untyped input and
    :class:`ValidationError` when values break a module precondition.
    """
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        text = path.read_text()
        cp.read_string(text, source=str(path))
    except (OSError, UnicodeDecodeError, configparser.Error) as exc:
        raise ScenarioParseError(str(exc).splitlines()[0]) from None
    unknown = set(cp.sections()) - set(SECTIONS)
    if unknown:
        raise ScenarioParseError(f"unknown section(s): {', '.join(sorted(unknown))}")
    for name in cp.sections():
        extra = set(cp[name]) - KEYS[name]
        if extra:
            raise ScenarioParseError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    sec = {name: (cp[name] if cp.has_section(name) else None) for name in SECTIONS}

    b = sec["bath"]
    kind = _get(b, "kind", str, "nn").lower()
    try:
        kind = BathKind(kind)
    except ValueError:
        raise ValidationError(f"bath kind must be 'nn' or 'nnn', got {kind!r}") from None
    bath = BathModel(kind,
                     _get(b, "xi", float, 0.2),
                     _get(b, "xi_prime", float, 0.0),
                     _get(b, "n_modes", int, 1201),
                     _get(b, "omega_c", float, 1.0))

    e = sec["emitters"]
    omega0 = _get(e, "omega0", float, 1.0)
    g = _get(e, "g", float, 0.05)
    ref = _get(e, "reference_site", int, 1)
    seps = _get(e, "separations", _int_list, None)
    site1 = _get(e, "site1", int, None)
    site2 = _get(e, "site2", int, None)
    if seps is not None and (site1 is not None or site2 is not None):
        raise ValidationError("give either separations or site1/site2, not both")
    if (site1 is None) != (site2 is None):
        raise ValidationError("site1 and site2 must be given together")
    if site1 is not None:
        pairs = [EmitterPair(omega0, g, site1, site2)]
    else:
        if seps is None:
            seps = [0, 1, 2, 3, 4, 5]
        if not seps:
            raise ValidationError("empty separation sweep")
        if any(s < 0 for s in seps) or len(set(seps)) != len(seps):
            raise ValidationError("separations must be distinct and non-negative")
        pairs = [EmitterPair.with_separation(s, omega0, g, ref) for s in seps]
    for p in pairs:
        for m in (p.site1, p.site2):
            if not 1 <= m <= bath.n_modes:
                raise ValidationError(f"emitter site {m} outside 1..{bath.n_modes}")
    if not math.isfinite(omega0):
        raise ValidationError("omega0 must be finite")

    r = sec["run"]
    outputs = _get(r, "outputs", _word_list, ["all"])
    if not outputs:
        raise ValidationError("no outputs requested")
    bad = set(outputs) - set(OUTPUT_KINDS) - {"all"}
    if bad:
        raise ValidationError(f"unknown output kind(s): {', '.join(sorted(bad))}")
    outputs = OUTPUT_KINDS if "all" in outputs else tuple(k for k in OUTPUT_KINDS if k in outputs)
    horizon = _positive("horizon", _get(r, "horizon", float, 2000.0))
    step = _positive("step", _get(r, "step", float, 0.02))
    method = _get(r, "method", str, "coupled").lower()
    if method not in ("coupled", "decoupled"):
        raise ValidationError(f"method must be 'coupled' or 'decoupled', got {method!r}")
    stride = _get(r, "csv_stride", int, 10)
    if stride < 1:
        raise ValidationError("csv_stride must be >= 1")

    out_dir = Path(_get(sec["output"], "directory", str, "out"))

    t = sec["tolerances"]
    tol = Tolerances(
        _positive("step_tol", _get(t, "step_tol", float, 1e-6)),
        _get(t, "window_fraction", float, 0.1),
        _positive("oracle_weight_factor", _get(t, "oracle_weight_factor", float, 10.0)),
        _get(t, "oracle_n_modes", int, 301),
        _positive("oracle_horizon", _get(t, "oracle_horizon", float, 300.0)),
    )
    if not 0 < tol.window_fraction <= 0.5:
        raise ValidationError("window_fraction must be in (0, 0.5]")
    bath.with_modes(tol.oracle_n_modes)  # validates oddness
    return Scenario(bath, tuple(pairs), outputs, horizon, step, method, stride, out_dir, tol, text)
