"""Exponentially small non-adiabatic transitions: simulation, prediction and scattering."""

from ._core import (
    CoherentState,
    Model,
    MolzError,
    canonical_config,
    evolve,
    find_crossing,
    im_gamma,
    make_model,
    predict,
    s_matrix,
)

__all__ = [
    "CoherentState",
    "Model",
    "MolzError",
    "canonical_config",
    "evolve",
    "find_crossing",
    "im_gamma",
    "make_model",
    "predict",
    "s_matrix",
]
