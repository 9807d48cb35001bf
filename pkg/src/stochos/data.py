"""Time-series and configuration loading.

Series files are CSV with the header ``timestamp,measured,forecast`` and one
row per hour.  Configuration is a JSON document whose top-level keys are the
operational parameters plus an optional ``fleet`` block.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

CHANNELS = ("wind", "wave", "price")
HEADER = ("timestamp", "measured", "forecast")
TIME_FORMAT = "%Y-%m-%d %H:%M:%S"
HOUR = timedelta(hours=1)


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class ConfigError(ValueError):
    """Configuration value violates an invariant."""

    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.field = name


@dataclass(frozen=True)
class SeriesRecord:
    timestamp: datetime
    measured: float  # NaN when the cell was empty
    forecast: float
    flagged: bool = False  # missing value or a gap right before this row


def _parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1]
    ts = datetime.fromisoformat(text.replace("T", " "))
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts


def _parse_value(text: str) -> float:
    text = text.strip()
    if text == "" or text.lower() == "nan":
        return math.nan
    return float(text)


def _format_value(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def load_series(path, channel: str) -> list[SeriesRecord]:
    """Read and validate one channel's hourly series.

    Rows with a missing value, and rows that follow a gap in the hourly
    sequence, are flagged rather than dropped or interpolated.
    """
    if channel not in CHANNELS:
        raise DataError(f"unknown channel {channel!r}")
    path = Path(path)
    records: list[SeriesRecord] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise DataError(f"{path}:1: expected header {','.join(HEADER)}")
        prev = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                ts = _parse_timestamp(row[0])
                measured = _parse_value(row[1])
                forecast = _parse_value(row[2])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            flagged = math.isnan(measured) or math.isnan(forecast)
            if prev is not None:
                step = ts - prev
                if step <= timedelta(0):
                    raise DataError(
                        f"{path}:{lineno}: timestamp {ts:{TIME_FORMAT}} is not after "
                        f"{prev:{TIME_FORMAT}}"
                    )
                if step % HOUR:
                    raise DataError(f"{path}:{lineno}: timestamp {ts:{TIME_FORMAT}} is off the hourly grid")
                if step > HOUR:
                    flagged = True
            if channel in ("wind", "wave"):
                for value in (measured, forecast):
                    if value < 0:
                        raise DataError(f"{path}:{lineno}: negative {channel} value {value}")
            records.append(SeriesRecord(ts, measured, forecast, flagged))
            prev = ts
    n_flagged = sum(r.flagged for r in records)
    logger.info("loaded %s: %d records, %d flagged", path.name, len(records), n_flagged)
    return records


def dump_series(records, path) -> None:
    """Write records in the canonical CSV layout read by :func:`load_series`."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for r in records:
            writer.writerow([r.timestamp.strftime(TIME_FORMAT), _format_value(r.measured), _format_value(r.forecast)])


@dataclass(frozen=True)
class OperationalParams:
    K: float = 4000.0  # PM cost per task
    Phi: float = 10000.0  # CM cost per task
    Omega: float = 2500.0  # vessel day rate
    Psi: float = 250.0  # crew hourly rate
    Q: float = 125.0  # overtime hourly rate
    B: int = 2  # crews
    W: float = 8.0  # regular hours per crew
    H: float = 8.0  # overtime cap, hours
    C1: float = 1000.0  # spot crew contracting
    C2: float = 1000.0  # spot overtime contracting
    R: float = 12.0  # rated capacity, MW
    nu_max: float = 15.0
    eta_max: float = 1.8
    t_R: int = 6
    t_D: int = 21
    N_D: int = 7
    N_S: int = 50
    gap: float = 1e-3
    bigM: float | None = None  # None -> 24*N_D + 24
    g: float = 1e-3
    cut_in: float = 3.0
    rated_speed: float = 11.0
    cut_out: float = 25.0
    curtailment: float = 1.0  # injectable fraction of farm output, every hour

    def __post_init__(self):
        for name in ("K", "Phi", "Omega", "Psi", "Q", "C1", "C2", "W", "H", "R"):
            if getattr(self, name) < 0:
                raise ConfigError(name, "must be >= 0")
        if self.B < 0:
            raise ConfigError("B", "must be >= 0")
        if not self.Phi > self.K:
            raise ConfigError("Phi", f"CM cost {self.Phi} must exceed PM cost K={self.K}")
        if not 0 <= self.t_R < self.t_D <= 24:
            raise ConfigError("t_R", f"need 0 <= t_R < t_D <= 24, got t_R={self.t_R}, t_D={self.t_D}")
        if self.N_D < 1:
            raise ConfigError("N_D", "must be >= 1")
        if self.N_S < 1:
            raise ConfigError("N_S", "must be >= 1")
        if not 0 < self.gap < 1:
            raise ConfigError("gap", "must lie in (0, 1)")
        if not self.g > 0:
            raise ConfigError("g", "must be > 0")
        if self.nu_max <= 0 or self.eta_max <= 0:
            raise ConfigError("nu_max", "access thresholds must be positive")
        if not 0 <= self.cut_in < self.rated_speed < self.cut_out:
            raise ConfigError("rated_speed", "need 0 <= cut_in < rated_speed < cut_out")
        if not 0 <= self.curtailment <= 1:
            raise ConfigError("curtailment", "must lie in [0, 1]")
        if self.bigM is not None and self.bigM < self.horizon_hours:
            raise ConfigError("bigM", f"must be >= {self.horizon_hours} (hours in the planning horizon)")

    @property
    def horizon_hours(self) -> int:
        return 24 * self.N_D + 24

    @property
    def big_m(self) -> float:
        return float(self.horizon_hours if self.bigM is None else self.bigM)


@dataclass(frozen=True)
class FleetConfig:
    tau: tuple[int, ...] = (11, 5, 6, 4, 4)
    lambda_true: tuple[float, ...] = (2.0, 6.8, 11.5, 16.2, 21.0)
    lambda_hat: tuple[float, ...] = (4.0, 6.1, 13.2, 6.8, 23.8)
    xi: tuple[float, ...] = (2.0, 2.0, 2.0, 2.0, 2.0)

    def __post_init__(self):
        n = len(self.tau)
        for name in ("lambda_true", "lambda_hat", "xi"):
            if len(getattr(self, name)) != n:
                raise ConfigError(name, f"expected {n} entries to match tau")
        if n == 0:
            raise ConfigError("tau", "fleet is empty")
        if any(t < 1 or int(t) != t for t in self.tau):
            raise ConfigError("tau", "repair times must be integers >= 1")
        if any(v < 0 for v in self.lambda_true):
            raise ConfigError("lambda_true", "must be >= 0")
        if any(v < 0 for v in self.lambda_hat):
            raise ConfigError("lambda_hat", "must be >= 0")
        if any(v <= 0 for v in self.xi):
            raise ConfigError("xi", "must be > 0")

    @property
    def n_turbines(self) -> int:
        return len(self.tau)


def _coerce_fleet(block: dict) -> FleetConfig:
    known = {f.name for f in fields(FleetConfig)}
    unknown = set(block) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown fleet field")
    kwargs = {}
    n = len(block["tau"]) if "tau" in block else None
    for name, value in block.items():
        if name == "xi" and not isinstance(value, (list, tuple)):
            kwargs[name] = value
            continue
        if not isinstance(value, (list, tuple)):
            raise ConfigError(name, "expected a list")
        kwargs[name] = tuple(int(v) if name == "tau" else float(v) for v in value)
    if "xi" in kwargs and not isinstance(kwargs["xi"], tuple):
        size = n or len(FleetConfig().tau)
        kwargs["xi"] = (float(kwargs["xi"]),) * size
    if n is not None and "xi" not in kwargs:
        kwargs["xi"] = (2.0,) * n
    return FleetConfig(**kwargs)


def parse_config(doc: dict) -> tuple[OperationalParams, FleetConfig]:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    doc = dict(doc)
    fleet_block = doc.pop("fleet", None)
    known = {f.name: f for f in fields(OperationalParams)}
    for name in doc:
        if name not in known:
            raise ConfigError(name, "unknown parameter")
    kwargs = {}
    for name, value in doc.items():
        if name in ("B", "t_R", "t_D", "N_D", "N_S"):
            if int(value) != value:
                raise ConfigError(name, "must be an integer")
            value = int(value)
        elif value is not None:
            value = float(value)
        kwargs[name] = value
    params = OperationalParams(**kwargs)
    fleet = FleetConfig() if fleet_block is None else _coerce_fleet(fleet_block)
    return params, fleet


def load_config(path) -> tuple[OperationalParams, FleetConfig]:
    """Load a JSON config; absent fields keep their default values."""
    with Path(path).open() as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return parse_config(doc)


def config_to_dict(params: OperationalParams, fleet: FleetConfig) -> dict:
    doc = asdict(params)
    doc["fleet"] = {k: list(v) for k, v in asdict(fleet).items()}
    return doc


@dataclass
class Dataset:
    """Hourly measured and forecast values for all channels on one grid.

    Arrays are indexed by hours since ``start``; gaps in the source files
    appear as NaN and are never filled in.
    """

    start: datetime
    measured: dict[str, np.ndarray]
    forecast: dict[str, np.ndarray]
    flags: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_hours(self) -> int:
        return len(self.measured["wind"])

    @property
    def n_days(self) -> int:
        return self.n_hours // 24

    def daily(self, kind: str, channel: str) -> np.ndarray:
        values = (self.measured if kind == "measured" else self.forecast)[channel]
        days = values[: self.n_days * 24].reshape(self.n_days, 24)
        with np.errstate(invalid="ignore"):
            out = days.mean(axis=1)  # any NaN hour makes the day NaN
        return out

    def require_window(self, start_day: int, n_days: int) -> None:
        """Fail unless hourly data covers ``n_days`` days from ``start_day``."""
        if start_day < 0 or (start_day + n_days) * 24 > self.n_hours:
            raise DataError(
                f"dataset has {self.n_days} days; window needs days {start_day}..{start_day + n_days - 1}"
            )

    def window(self, start_day: int, n_days: int) -> "Dataset":
        return self.slice_hours(24 * start_day, 24 * (start_day + n_days))

    def slice_hours(self, lo: int, hi: int) -> "Dataset":
        return Dataset(
            start=self.start + lo * HOUR,
            measured={k: v[lo:hi] for k, v in self.measured.items()},
            forecast={k: v[lo:hi] for k, v in self.forecast.items()},
            flags={k: v[lo:hi] for k, v in self.flags.items()},
        )


def dataset_from_records(series: dict[str, list[SeriesRecord]]) -> Dataset:
    missing = [c for c in CHANNELS if c not in series]
    if missing:
        raise DataError(f"missing channel(s): {', '.join(missing)}")
    start = min(recs[0].timestamp for recs in series.values() if recs)
    end = max(recs[-1].timestamp for recs in series.values() if recs)
    n = int((end - start) / HOUR) + 1
    measured, forecast, flags = {}, {}, {}
    for channel in CHANNELS:
        m = np.full(n, np.nan)
        f = np.full(n, np.nan)
        flag = np.ones(n, dtype=bool)
        for r in series[channel]:
            k = int((r.timestamp - start) / HOUR)
            m[k], f[k], flag[k] = r.measured, r.forecast, r.flagged
        measured[channel], forecast[channel], flags[channel] = m, f, flag
    return Dataset(start, measured, forecast, flags)


def load_dataset(data_dir) -> Dataset:
    """Load ``wind.csv``, ``wave.csv`` and ``price.csv`` from a directory."""
    data_dir = Path(data_dir)
    series = {}
    for channel in CHANNELS:
        path = data_dir / f"{channel}.csv"
        if not path.exists():
            raise DataError(f"{path} not found")
        series[channel] = load_series(path, channel)
    return dataset_from_records(series)


def dataset_to_records(dataset: Dataset) -> dict[str, list[SeriesRecord]]:
    out = {}
    for channel in CHANNELS:
        m, f = dataset.measured[channel], dataset.forecast[channel]
        out[channel] = [
            SeriesRecord(dataset.start + k * HOUR, float(m[k]), float(f[k]), bool(np.isnan(m[k]) or np.isnan(f[k])))
            for k in range(dataset.n_hours)
        ]
    return out


def save_dataset(dataset: Dataset, data_dir) -> None:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    for channel, records in dataset_to_records(dataset).items():
        dump_series(records, data_dir / f"{channel}.csv")


def with_overrides(params: OperationalParams, **changes) -> OperationalParams:
    return replace(params, **changes)
