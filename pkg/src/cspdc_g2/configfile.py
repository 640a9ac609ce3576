"""TOML experiment configuration files and CSV result tables.

Configuration layout (units are part of the key names)::

    coincidence_window_s = 5e-9
    truncation_epsilon = 1e-12      # optional
    plateau_delta = 0.1             # optional

    [source]
    type = "cspdc"                  # or "spdc"
    pair_rate_hz = 1e5              # optional for minimisation/threshold commands
    cascade_efficiency = 1e-6       # cspdc only

    [detectors.herald_stage2]       # detector "1"
    eta = 0.7
    dark_hz = 20
    [detectors.herald_stage1]       # detector "2", cspdc only
    [detectors.g2_a]
    [detectors.g2_b]
"""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import ConfigError, DetectorSpec, ExperimentConfig, Model, SourceKind
from .detstate import DEFAULT_EPSILON
from .optsweep import DEFAULT_DELTA, SweepParameter, SweepRow

TOP_KEYS = {"coincidence_window_s", "source", "detectors", "truncation_epsilon", "plateau_delta"}
SOURCE_KEYS = {"type", "pair_rate_hz", "cascade_efficiency"}
DETECTOR_KEYS = {"eta", "dark_hz"}
DETECTOR_ROLES = ("herald_stage2", "herald_stage1", "g2_a", "g2_b")


@dataclass(frozen=True)
class LoadedConfig:
    experiment: ExperimentConfig
    truncation_epsilon: float = DEFAULT_EPSILON
    plateau_delta: float = DEFAULT_DELTA


def _number(value, key, *, positive=False, nonneg=False, unit=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite")
    if positive and value <= 0:
        raise ConfigError(f"{key}: must be > 0")
    if nonneg and value < 0:
        raise ConfigError(f"{key}: must be >= 0")
    if unit and not 0 <= value <= 1:
        raise ConfigError(f"{key}: must lie in [0, 1]")
    return value


def _table(doc, key):
    if not isinstance(doc, dict):
        raise ConfigError(f"{key}: expected a table")
    return doc


def _reject_unknown(doc, allowed, prefix):
    for k in doc:
        if k not in allowed:
            raise ConfigError(f"{prefix}{k}: unknown key")


def _detector(doc, key) -> DetectorSpec:
    doc = _table(doc, key)
    _reject_unknown(doc, DETECTOR_KEYS, key + ".")
    for req in ("eta", "dark_hz"):
        if req not in doc:
            raise ConfigError(f"{key}.{req}: required key missing")
    return DetectorSpec(
        eta=_number(doc["eta"], f"{key}.eta", unit=True),
        dark_rate=_number(doc["dark_hz"], f"{key}.dark_hz", nonneg=True),
    )


def parse_config(doc: dict) -> LoadedConfig:
    """Validate a decoded configuration document; errors name the offending key."""
    _reject_unknown(doc, TOP_KEYS, "")
    for req in ("coincidence_window_s", "source", "detectors"):
        if req not in doc:
            raise ConfigError(f"{req}: required key missing")
    window = _number(doc["coincidence_window_s"], "coincidence_window_s", positive=True)

    src = _table(doc["source"], "source")
    _reject_unknown(src, SOURCE_KEYS, "source.")
    if "type" not in src:
        raise ConfigError("source.type: required key missing")
    try:
        kind = SourceKind(str(src["type"]).lower())
    except ValueError:
        raise ConfigError(f"source.type: expected 'spdc' or 'cspdc', got {src['type']!r}") from None
    pair_rate = None
    if "pair_rate_hz" in src:
        pair_rate = _number(src["pair_rate_hz"], "source.pair_rate_hz", positive=True)
    cascade = None
    if kind is SourceKind.CSPDC:
        if "cascade_efficiency" not in src:
            raise ConfigError("source.cascade_efficiency: required for type 'cspdc'")
        cascade = _number(src["cascade_efficiency"], "source.cascade_efficiency", unit=True)
    elif "cascade_efficiency" in src:
        raise ConfigError("source.cascade_efficiency: not allowed for type 'spdc'")

    dets = _table(doc["detectors"], "detectors")
    _reject_unknown(dets, DETECTOR_ROLES, "detectors.")
    needed = ["herald_stage2", "g2_a", "g2_b"]
    if kind is SourceKind.CSPDC:
        needed.append("herald_stage1")
    elif "herald_stage1" in dets:
        raise ConfigError("detectors.herald_stage1: not allowed for type 'spdc'")
    for role in needed:
        if role not in dets:
            raise ConfigError(f"detectors.{role}: required key missing")
    specs = {role: _detector(dets[role], f"detectors.{role}") for role in dets}

    eps = _number(doc.get("truncation_epsilon", DEFAULT_EPSILON), "truncation_epsilon", positive=True)
    if eps >= 1:
        raise ConfigError("truncation_epsilon: must be < 1")
    delta = _number(doc.get("plateau_delta", DEFAULT_DELTA), "plateau_delta", nonneg=True)

    cfg = ExperimentConfig(
        window=window,
        source_kind=kind,
        herald_stage2=specs["herald_stage2"],
        herald_stage1=specs.get("herald_stage1"),
        g2_a=specs["g2_a"],
        g2_b=specs["g2_b"],
        pair_rate=pair_rate,
        cascade_efficiency=cascade,
    )
    return LoadedConfig(cfg, eps, delta)


def load_config(path) -> LoadedConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML ({exc})") from None
    return parse_config(doc)


def dump_config(cfg: ExperimentConfig, *, truncation_epsilon=None, plateau_delta=None) -> str:
    """TOML text for ``cfg`` (inverse of :func:`parse_config`)."""
    lines = [f"coincidence_window_s = {cfg.window!r}"]
    if truncation_epsilon is not None:
        lines.append(f"truncation_epsilon = {truncation_epsilon!r}")
    if plateau_delta is not None:
        lines.append(f"plateau_delta = {plateau_delta!r}")
    lines += ["", "[source]", f'type = "{cfg.source_kind.value}"']
    if cfg.pair_rate is not None:
        lines.append(f"pair_rate_hz = {cfg.pair_rate!r}")
    if cfg.cascade_efficiency is not None:
        lines.append(f"cascade_efficiency = {cfg.cascade_efficiency!r}")
    for role in DETECTOR_ROLES:
        det = getattr(cfg, role)
        if det is not None:
            lines += ["", f"[detectors.{role}]", f"eta = {det.eta!r}", f"dark_hz = {det.dark_rate!r}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# result tables

RESULT_COLUMNS = ["model", "source_type", "g2", "n_opt", "g2_min",
                  "plateau_lo_hz", "plateau_hi_hz", "sigma"]
ECHO_COLUMNS = ["window_s", "pair_rate_hz", "cascade_efficiency",
                "eta_1", "dark_1_hz", "eta_2", "dark_2_hz",
                "eta_a", "dark_a_hz", "eta_b", "dark_b_hz", "error"]
_ECHO_ROLES = (("1", "herald_stage2"), ("2", "herald_stage1"), ("a", "g2_a"), ("b", "g2_b"))


def fmt(x: Optional[float]) -> str:
    """Table rendering of a number: scientific notation, 9 significant digits."""
    if x is None:
        return ""
    return f"{x:.8e}"


def _echo(cfg: Optional[ExperimentConfig]) -> list:
    if cfg is None:
        return [""] * (len(ECHO_COLUMNS) - 1)
    out = [fmt(cfg.window), fmt(cfg.pair_rate), fmt(cfg.cascade_efficiency)]
    for _, role in _ECHO_ROLES:
        det = getattr(cfg, role)
        out += [fmt(det.eta), fmt(det.dark_rate)] if det is not None else ["", ""]
    return out


def table_header(parameter) -> list:
    return [SweepParameter(parameter).value] + RESULT_COLUMNS + ECHO_COLUMNS


def table_row(row: SweepRow) -> list:
    return ([fmt(row.value), row.model.value, row.source_type, fmt(row.g2), fmt(row.n_opt),
             fmt(row.g2_min), fmt(row.plateau_lo), fmt(row.plateau_hi), fmt(row.sigma)]
            + _echo(row.cfg) + [row.error or ""])


def write_table(rows, parameter, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(table_header(parameter))
    for row in rows:
        writer.writerow(table_row(row))


def table_text(rows, parameter) -> str:
    buf = io.StringIO()
    write_table(rows, parameter, buf)
    return buf.getvalue()


def _opt(s: str) -> Optional[float]:
    return float(s) if s != "" else None


def read_table(fh) -> list:
    """Parse a result table back into :class:`SweepRow` objects."""
    reader = csv.reader(fh)
    header = next(reader)
    parameter = SweepParameter(header[0])
    rows = []
    for rec in reader:
        # the swept column can share its name with an echo column, so read it by position
        d = dict(zip(header[1:], rec[1:]))
        cfg = None
        if d["source_type"]:
            dets = {}
            for tag, role in _ECHO_ROLES:
                if d[f"eta_{tag}"] != "":
                    dets[role] = DetectorSpec(float(d[f"eta_{tag}"]), float(d[f"dark_{tag}_hz"]))
            cfg = ExperimentConfig(
                window=float(d["window_s"]),
                source_kind=SourceKind(d["source_type"]),
                pair_rate=_opt(d["pair_rate_hz"]),
                cascade_efficiency=_opt(d["cascade_efficiency"]),
                **dets,
            )
        rows.append(SweepRow(
            parameter=parameter, value=float(rec[0]), model=Model(d["model"]),
            cfg=cfg, g2=_opt(d["g2"]), n_opt=_opt(d["n_opt"]), g2_min=_opt(d["g2_min"]),
            plateau_lo=_opt(d["plateau_lo_hz"]), plateau_hi=_opt(d["plateau_hi_hz"]),
            sigma=_opt(d["sigma"]), error=d["error"] or None,
        ))
    return rows
