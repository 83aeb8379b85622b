"""Functional sparse Tucker compression of multidimensional fields.

Thin package wrapper around the compiled extension. Arrays are exchanged in
the mode-0-fastest (Fortran) layout; C-ordered inputs are converted.
"""

from ._fstk import (
    BasisSpec,
    Model,
    TuckerDecomposition,
    assemble,
    eval_basis,
    interpolate_to_grid,
    load_model,
    reconstruct,
    reestimate_core,
    set_max_threads,
    sthosvd,
    synth_field_cloud,
    synth_field_grid,
)

__all__ = [
    "BasisSpec",
    "Model",
    "TuckerDecomposition",
    "assemble",
    "eval_basis",
    "interpolate_to_grid",
    "load_model",
    "reconstruct",
    "reestimate_core",
    "set_max_threads",
    "sthosvd",
    "synth_field_cloud",
    "synth_field_grid",
]
