"""Temporal-translation attacks on small video classifiers."""

import json

from . import _core
from ._core import (
    ConfigError,
    FormatError,
    InputError,
    IoError,
    Model,
    NumericFault,
    ProtocolError,
    RangeError,
    SpecError,
    augmented_gradient,
    bench,
    cross_entropy,
    importance,
    load_clips,
    load_model,
    make_model,
    spearman_rho,
    temporal_shift,
    train,
    verify,
    weight_matrix,
)

__all__ = [
    "ConfigError", "FormatError", "InputError", "IoError", "Model", "NumericFault", "ProtocolError",
    "RangeError", "SpecError", "augmented_gradient", "bench", "cross_entropy", "generate_dataset",
    "importance", "load_clips", "load_model", "make_model", "spearman_rho", "temporal_shift", "train",
    "tt_attack", "verify", "weight_matrix",
]


def generate_dataset(spec, out):
    """Write a synthetic dataset; `spec` is a dict of DatasetSpec fields."""
    return _core.generate_dataset(json.dumps(spec or {}), str(out))


def tt_attack(model, clip, label, **config):
    """Run one attack. Keyword arguments are AttackConfig fields."""
    return _core.tt_attack(model, clip, int(label), json.dumps(config))
