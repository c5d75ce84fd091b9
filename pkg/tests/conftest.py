"""Shared fixtures: cheap synthetic datasets and planted-truth builders."""

import numpy as np
import pytest

from glucokit.acquisition import AdcConfig, ForwardModelConfig, generate_dataset
from glucokit.data import ChannelVoltages, Dataset, GlucoseValue, Sample
from glucokit.regressors import feature_matrix


@pytest.fixture
def adc():
    return AdcConfig()


@pytest.fixture
def dataset_factory():
    """Datasets through the real signal path; defaults kept cheap for tests."""

    def make(n=40, seed=0, noise_sd=2.0, n_raw=8, glucose_range=(60.0, 340.0),
             serum_delta=0.05):
        fm = ForwardModelConfig(noise_sd_mv=noise_sd, seed=seed)
        return generate_dataset(n, glucose_range, fm, AdcConfig(),
                                n_raw=n_raw, serum_delta=serum_delta)

    return make


@pytest.fixture
def planted_poly():
    """Dataset whose capillary values follow a known 19-term cubic exactly.

    The cubic is planted in z-scored voltage space with the dataset's own
    mean/std, which is exactly the transform the polynomial fit applies, so
    recovery should be limited only by floating point.
    """

    def make(n=100, seed=3, intercept=180.0, spread=100.0):
        rng = np.random.default_rng(seed)
        x = rng.uniform(1500.0, 3200.0, size=(n, 3))
        z = (x - x.mean(axis=0)) / x.std(axis=0)
        phi = feature_matrix(z)
        c = rng.uniform(-1.0, 1.0, size=phi.shape[1])
        c *= spread / np.abs(phi @ c).max()
        y = phi @ c + intercept
        samples = tuple(
            Sample(f"p-{i:03d}", ChannelVoltages(*x[i]),
                   GlucoseValue(float(y[i]), "capillary"), None,
                   "fasting", "unspecified", None)
            for i in range(n)
        )
        return Dataset(samples), c, intercept

    return make


@pytest.fixture
def tiny_samples():
    """Hand-sized list of valid samples for structural tests."""
    out = []
    for i, g in enumerate((80.0, 120.0, 200.0, 310.0)):
        out.append(Sample(
            f"t{i}", ChannelVoltages(2400.0 - i, 2100.0 + i, 1900.0),
            GlucoseValue(g, "capillary"), GlucoseValue(g * 0.95, "serum"),
            "fasting", "female" if i % 2 else "male", 30 + i,
        ))
    return out
