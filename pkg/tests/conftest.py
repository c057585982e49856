import math
from datetime import datetime, timedelta, timezone
from importlib import resources

import numpy as np
import pytest

from greenflag.weather import WeatherRecord, load_weather_csv


def sample_weather_path():
    return resources.files("greenflag") / "data" / "sample_weather.csv"


@pytest.fixture(scope="session")
def sample_records():
    return load_weather_csv(sample_weather_path())


@pytest.fixture(scope="session")
def weather_path():
    return str(sample_weather_path())


def make_records(hours=30, radiation=500.0, oktas=2.0, wind=4.0, seed=None):
    """Small synthetic record list; constant weather unless a seed is given."""
    rng = np.random.default_rng(seed) if seed is not None else None
    t0 = datetime(2020, 1, 1, tzinfo=timezone.utc)
    records = []
    for h in range(hours):
        if rng is None:
            rad, okt, spd = radiation, oktas, wind
        else:
            hour = h % 24
            rad = max(0.0, 800.0 * math.sin(math.pi * (hour - 6) / 12)) if 6 <= hour <= 18 else 0.0
            okt = float(rng.uniform(0, 8))
            spd = float(rng.uniform(0, 10))
        records.append(WeatherRecord(t0 + timedelta(hours=h), rad, okt, spd))
    return records


@pytest.fixture
def constant_records():
    return make_records(hours=60)
