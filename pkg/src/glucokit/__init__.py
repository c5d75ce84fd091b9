"""Non-invasive glucometer toolkit: synthetic NIR acquisition, regression
calibration, Clarke error grid evaluation, and offline-tolerant telemetry."""

__version__ = "0.1.0"
