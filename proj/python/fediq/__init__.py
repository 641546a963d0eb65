"""Federated self-supervised representation learning on synthetic I/Q streams.

Thin Python surface over the C++ core: frame synthesis, the dilated causal
encoder, triplet loss, federated aggregation and wire quantization, linear
classification, the closed-form theory bounds, IQDS container IO, and the
experiment commands.
"""

from fediq._core import (
    ConfigError,
    DataError,
    Encoder,
    InternalError,
    Svm,
    __version__,
    aggregate,
    doppler_offset,
    f16_roundtrip,
    generate_frame,
    gradient_variance_bound,
    gradient_variance_bound_simplified,
    implied_moment_bound,
    int8_scale,
    modulate,
    out_root,
    param_count,
    q_function,
    quantize_roundtrip,
    read_iqds,
    receptive_field,
    rerun,
    run,
    scale_noise_for_snr,
    separability_prob_bound,
    triplet_loss,
    write_iqds,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Encoder",
    "InternalError",
    "Svm",
    "__version__",
    "aggregate",
    "doppler_offset",
    "f16_roundtrip",
    "generate_frame",
    "gradient_variance_bound",
    "gradient_variance_bound_simplified",
    "implied_moment_bound",
    "int8_scale",
    "modulate",
    "out_root",
    "param_count",
    "q_function",
    "quantize_roundtrip",
    "read_iqds",
    "receptive_field",
    "rerun",
    "run",
    "scale_noise_for_snr",
    "separability_prob_bound",
    "triplet_loss",
    "write_iqds",
]
