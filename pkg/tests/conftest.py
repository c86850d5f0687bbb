import enum

import pytest

from foresight.market_data import synthetic_series, write_ohlcv_csv


def pytest_make_parametrize_id(config, val, argname):
    if isinstance(val, enum.Enum):
        val = val.value
    return f"{argname}={val}"


@pytest.fixture
def synthetic_csv(tmp_path):
    """Bars long enough to survive the longest indicator warm-up with about 120 rows left."""
    return write_ohlcv_csv(synthetic_series(420, seed=3, symbol="SYNTH"), tmp_path / "synth.csv")
