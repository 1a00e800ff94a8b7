from ._core import (
    ConfigError,
    DataError,
    LpmError,
    Network,
    NumericalError,
    adjusted_rand_index,
    classical_mds,
    fit,
    geodesic_distances,
    load_edge_list,
    log_likelihood,
    mixture_bic,
    procrustes,
    scan,
    simulate,
)

__all__ = [
    "ConfigError",
    "DataError",
    "LpmError",
    "Network",
    "NumericalError",
    "adjusted_rand_index",
    "classical_mds",
    "fit",
    "geodesic_distances",
    "load_edge_list",
    "log_likelihood",
    "mixture_bic",
    "procrustes",
    "scan",
    "simulate",
]
