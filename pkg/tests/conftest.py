import numpy as np
import pytest

from curelay import PowerConfig, ScenarioGeometry, derive_etas


@pytest.fixture(scope="session")
def default_geom():
    """Default two-cell placement: BS1 at origin, BS2 at (2,0), SU1 at (1,0),
    PU1 at (0.75,0), PU4 at 0.4 from SU1, 30 degrees off the perpendicular."""
    pu4 = (1.0 + 0.4 * np.sin(np.deg2rad(30.0)), 0.4 * np.cos(np.deg2rad(30.0)))
    return ScenarioGeometry(
        s=0.75,
        l=0.25,
        r=float(np.hypot(pu4[0] - 0.75, pu4[1])),
        q=float(np.hypot(pu4[0], pu4[1])),
        z=0.4,
        d=1.0,
        epsilon=4.0,
    )


@pytest.fixture(scope="session")
def default_cfg():
    return PowerConfig(p_cci_db=20.0, w_db=10.0, gamma_bar_db=30.0)


@pytest.fixture(scope="session")
def default_etas(default_geom):
    return derive_etas(default_geom)


def ks_statistic(samples, cdf_values_at_sorted):
    """max |ECDF - CDF| over the sample points (both one-sided gaps)."""
    n = samples.size
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    return max(np.abs(ecdf_hi - cdf_values_at_sorted).max(),
               np.abs(cdf_values_at_sorted - ecdf_lo).max())
