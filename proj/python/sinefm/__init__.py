"""SineFM: seed-feature-map CNN layers with seeded-transform transmission.

The heavy lifting lives in the C++ extension module; this package re-exports
its public surface.
"""

from sinefm._core import (
    Model,
    SineFMError,
    TransformSpec,
    builtin_arch,
    channel_plan,
    conv_flops,
    convert_to_sinefm,
    eval_polynomial_recurrence,
    families,
    fit_alpha,
    grad_check_layer,
    model_cost,
    normalize_maps,
    sample_hyperparams,
    sinefm_flops,
    size_report,
    standardize,
)

__all__ = [
    "Model",
    "SineFMError",
    "TransformSpec",
    "builtin_arch",
    "channel_plan",
    "conv_flops",
    "convert_to_sinefm",
    "eval_polynomial_recurrence",
    "families",
    "fit_alpha",
    "grad_check_layer",
    "model_cost",
    "normalize_maps",
    "sample_hyperparams",
    "sinefm_flops",
    "size_report",
    "standardize",
]

__version__ = "0.1.0"
