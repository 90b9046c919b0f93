"""Belief-propagation cluster recovery in the two-cluster sparse block model."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    GWTree,
    LabeledGraph,
    ModelParams,
    attach_noisy_labels,
    derive_params,
    params_from_rates,
    sample_gw_tree,
    sample_sbm,
)

__all__ = [
    "__version__",
    "GWTree",
    "LabeledGraph",
    "ModelParams",
    "attach_noisy_labels",
    "derive_params",
    "params_from_rates",
    "sample_gw_tree",
    "sample_sbm",
]
