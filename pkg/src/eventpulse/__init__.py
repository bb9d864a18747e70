"""City-level statistics of geo-tagged incident streams.

Exponential inter-event intervals, power-law death tolls, ML/CNML
next-event predictive densities, information-theoretic loss and
spectrogram growth trends.
"""

__version__ = "0.1.0"

from eventpulse.ingest import (
    City,
    CitySeries,
    ClusterReport,
    EventRecord,
    IngestError,
    cluster_to_cities,
    filter_sufficient,
    great_circle_km,
    parse_events,
    parse_gazetteer,
)
from eventpulse.distfit import (
    ExponentialFit,
    FitError,
    PowerLawFit,
    RegressionSummary,
    adjusted_r_squared,
    exponential_pdf,
    fit_exponential,
    fit_power_law,
    interval_attack_regression,
    population_correlation,
)
from eventpulse.predict import (
    PredictiveDensity,
    cnml_predictive,
    exponential_entropy,
    kl_empirical,
    kl_exponential,
    ml_predictive,
    quantile_next,
)
from eventpulse.spectral import (
    BandTrend,
    DailySeries,
    Spectrogram,
    band_growth,
    bin_daily,
    hamming_window,
    stft,
)
from eventpulse.synth import GeneratorSpec, gen_city, gen_fleet
