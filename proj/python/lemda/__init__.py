"""Learned multimodal feature-space data augmentation.

Thin wrapper over the C++ core: numeric ops on numpy arrays plus
config-driven experiment runners. See the project README for the config
grammar and output schemas.
"""

from lemda._core import (
    __version__,
    config_echo,
    cross_entropy,
    cross_entropy_grad,
    export_dataset,
    gaussian_sample,
    kl_divergence,
    matmul,
    measure_throughput,
    render_figure3,
    roc_auc,
    run_config_file,
    run_config_text,
    softmax,
    standard_normal_kl,
)

__all__ = [
    "__version__",
    "config_echo",
    "cross_entropy",
    "cross_entropy_grad",
    "export_dataset",
    "gaussian_sample",
    "kl_divergence",
    "matmul",
    "measure_throughput",
    "render_figure3",
    "roc_auc",
    "run_config_file",
    "run_config_text",
    "softmax",
    "standard_normal_kl",
]
