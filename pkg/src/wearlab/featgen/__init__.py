from .extract import extract_ds4, extract_ds6, extract_ds7, extract_ds8, extract_ds9
from .matrix import (
    CohortMatrix,
    FeatureVector,
    build_matrix,
    extract_all,
    read_features_csv,
    write_features_csv,
    write_registry_json,
)
from .primitives import (
    descriptive_stats,
    estimated_hba1c,
    glucose_band_fractions,
    glucose_cv,
    partition_by_daypart,
    rmssd,
)
from .registry import REGISTRY, FeatureRegistry
