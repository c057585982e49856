"""Hourly weather ingestion and per-round solar/wind harvest computation.

Solar harvest combines the atmospheric direct radiation with a cloud-cover
clearness index; wind harvest weights the cubic instantaneous turbine power
by a Weibull speed distribution fitted to the measured interval.  All
energies are in Joules over one round horizon of ``horizon`` seconds.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

WEATHER_CSV_HEADER = (
    "timestamp_utc",
    "direct_solar_radiation_wm2",
    "total_cloud_cover_oktas",
    "wind_speed_ms",
)

# Node count for the composite Simpson rule (even interval count).
_SIMPSON_NODES = 257


class WeatherCsvError(ValueError):
    """Raised when a weather CSV has a bad header or an invalid row."""


@dataclass(frozen=True)
class WeatherRecord:
    """One hourly sensor measurement.

    Attributes:
        timestamp: UTC measurement time.
        direct_solar_radiation: atmospheric direct solar radiation, W/m^2.
        cloud_cover_oktas: cloud cover on the 0..8 okta scale.
        wind_speed: wind speed, m/s.
    """

    timestamp: datetime
    direct_solar_radiation: float
    cloud_cover_oktas: float
    wind_speed: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.cloud_cover_oktas <= 8.0:
            raise ValueError(f"cloud cover must be in [0, 8] oktas, got {self.cloud_cover_oktas}")
        if self.direct_solar_radiation < 0.0:
            raise ValueError(f"solar radiation must be >= 0, got {self.direct_solar_radiation}")
        if self.wind_speed < 0.0:
            raise ValueError(f"wind speed must be >= 0, got {self.wind_speed}")


@dataclass(frozen=True)
class HarvestParams:
    """Physical constants of the harvesting hardware and the round horizon.

    Attributes:
        panel_area: solar panel area, m^2.
        air_density: kg/m^3.
        sweep_area: turbine blade sweep area, m^2.
        weibull_shape: Weibull shape k of the wind-speed model (k=2 is Rayleigh).
        horizon: round duration the harvest accumulates over, seconds.
    """

    panel_area: float = 0.03
    air_density: float = 1.225
    sweep_area: float = 0.1
    weibull_shape: float = 2.0
    horizon: float = 20.0

    def __post_init__(self) -> None:
        for name in ("panel_area", "air_density", "sweep_area", "weibull_shape", "horizon"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.weibull_shape < 1.0:
            raise ValueError("weibull_shape must be >= 1")


@dataclass(frozen=True)
class HarvestSeries:
    """Per-worker, per-round harvested energy in Joules.

    ``total[k, n]`` is the energy worker ``k`` can harvest during round ``n``;
    ``solar`` and ``wind`` are its additive components.
    """

    total: np.ndarray
    solar: np.ndarray
    wind: np.ndarray
    start_offset: int = 0
    efficiency: np.ndarray = field(default_factory=lambda: np.ones(0))


def clearness_index(cloud_cover_oktas: float) -> float:
    """Cloud attenuation factor in [0.25, 1]: 1 - (3/4) * (N/8)^3.4."""
    n = float(cloud_cover_oktas)
    if not 0.0 <= n <= 8.0:
        raise ValueError(f"cloud cover must be in [0, 8] oktas, got {n}")
    return 1.0 - 0.75 * (n / 8.0) ** 3.4


def solar_energy(record: WeatherRecord, params: HarvestParams) -> float:
    """Solar energy (J) harvested over one horizon from one record."""
    effective_radiation = clearness_index(record.cloud_cover_oktas) * record.direct_solar_radiation
    return effective_radiation * params.horizon * params.panel_area


def instantaneous_wind_power(v: float, params: HarvestParams) -> float:
    """Turbine power (W) at wind speed ``v``: 0.5 * rho * S * v^3."""
    if v < 0.0:
        raise ValueError(f"wind speed must be >= 0, got {v}")
    return 0.5 * params.air_density * params.sweep_area * v**3


def _weibull_pdf(v: np.ndarray, shape: float, scale: float) -> np.ndarray:
    x = v / scale
    return (shape / scale) * x ** (shape - 1.0) * np.exp(-(x**shape))


def wind_power_density(v_start: float, v_end: float, params: HarvestParams) -> float:
    """Average wind power (W) over the speed interval measured at a round's ends.

    Weights the instantaneous power curve by a Weibull density whose scale is
    fitted so that its mean equals the interval mean speed.  The integral runs
    over [min, max] of the pair via a 257-node composite Simpson rule; a
    degenerate interval collapses to the instantaneous power at that speed.
    """
    if v_start < 0.0 or v_end < 0.0:
        raise ValueError("wind speeds must be >= 0")
    lo, hi = sorted((float(v_start), float(v_end)))
    if lo == hi:
        # Unit probability mass on the single measured speed.
        return instantaneous_wind_power(lo, params)
    mean_speed = 0.5 * (lo + hi)
    k = params.weibull_shape
    scale = mean_speed / math.gamma(1.0 + 1.0 / k)
    v = np.linspace(lo, hi, _SIMPSON_NODES)
    power = 0.5 * params.air_density * params.sweep_area * v**3
    integrand = power * _weibull_pdf(np.maximum(v, 1e-300), k, scale)
    h = (hi - lo) / (_SIMPSON_NODES - 1)
    weights = np.ones(_SIMPSON_NODES)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, integrand))


def wind_energy(record_start: WeatherRecord, record_end: WeatherRecord, params: HarvestParams) -> float:
    """Wind energy (J) over one horizon bounded by two speed measurements."""
    return wind_power_density(record_start.wind_speed, record_end.wind_speed, params) * params.horizon


def load_weather_csv(path) -> list[WeatherRecord]:
    """Parse a weather CSV into records sorted by timestamp.

    The header must be exactly ``timestamp_utc,direct_solar_radiation_wm2,
    total_cloud_cover_oktas,wind_speed_ms``.  Rows violating the record
    invariants raise :class:`WeatherCsvError` with the offending line number.
    An empty data section yields an empty list with a warning.
    """
    records: list[WeatherRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise WeatherCsvError(f"{path}: empty file, expected header {','.join(WEATHER_CSV_HEADER)}")
        if tuple(h.strip() for h in header) != WEATHER_CSV_HEADER:
            raise WeatherCsvError(
                f"{path}: bad header {','.join(header)!r}, expected {','.join(WEATHER_CSV_HEADER)!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise WeatherCsvError(f"{path}:{line_no}: expected 4 fields, got {len(row)}")
            try:
                ts = datetime.fromisoformat(row[0].strip().replace("Z", "+00:00"))
                if ts.tzinfo is None:
                    ts = ts.replace(tzinfo=timezone.utc)
                record = WeatherRecord(
                    timestamp=ts,
                    direct_solar_radiation=float(row[1]),
                    cloud_cover_oktas=float(row[2]),
                    wind_speed=float(row[3]),
                )
            except (ValueError, TypeError) as exc:
                raise WeatherCsvError(f"{path}:{line_no}: {exc}") from exc
            records.append(record)
    if not records:
        warnings.warn(f"{path}: no weather records", stacklevel=2)
    records.sort(key=lambda r: r.timestamp)
    return records


def build_harvest_series(
    records: list[WeatherRecord],
    workers: int,
    iterations: int,
    params: HarvestParams,
    seed: int,
    efficiency: np.ndarray | float = 1.0,
) -> HarvestSeries:
    """Map consecutive hourly records onto rounds and workers.

    Round ``n`` uses record ``offset + n`` for solar radiation and the pair
    ``(offset + n, offset + n + 1)`` for the wind-speed interval; the offset
    is drawn from ``seed`` so distinct episodes see different weather.  All
    workers share the record (one geography); ``efficiency`` scales each
    worker's usable harvest.  Wraps around with a warning when the record
    series is shorter than the requested horizon.
    """
    if not records:
        raise ValueError("records must be non-empty")
    if workers < 1 or iterations < 1:
        raise ValueError("workers and iterations must be >= 1")
    eff = np.broadcast_to(np.asarray(efficiency, dtype=float), (workers,)).copy()
    if np.any(eff < 0.0):
        raise ValueError("efficiency factors must be >= 0")
    rng = np.random.default_rng(seed)
    n_rec = len(records)
    if n_rec > iterations:
        offset = int(rng.integers(0, n_rec - iterations))
    else:
        offset = int(rng.integers(0, n_rec))
        warnings.warn(
            f"only {n_rec} weather records for {iterations} rounds; wrapping around",
            stacklevel=2,
        )
    solar_row = np.empty(iterations)
    wind_row = np.empty(iterations)
    for n in range(iterations):
        start = records[(offset + n) % n_rec]
        end = records[(offset + n + 1) % n_rec]
        solar_row[n] = solar_energy(start, params)
        wind_row[n] = wind_energy(start, end, params)
    solar = eff[:, None] * solar_row[None, :]
    wind = eff[:, None] * wind_row[None, :]
    return HarvestSeries(total=solar + wind, solar=solar, wind=wind, start_offset=offset, efficiency=eff)
