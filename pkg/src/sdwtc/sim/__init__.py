"""Coding-scheme simulator: codebooks, likelihood encoding, typicality
decoding, and exact micro-scale secrecy metrics."""

from ._backend import BACKEND
from .engine import (
    Codebook,
    DecodeResult,
    EncodeResult,
    EncodingFailure,
    SchemeLaw,
    SimConfig,
    SimReport,
    divergence_surrogate,
    exact_leakage,
    generate_codebook,
    key_uniformity_exact,
    likelihood_encode,
    run_trials,
    typicality_decode,
)

__all__ = [
    "BACKEND",
    "Codebook",
    "DecodeResult",
    "EncodeResult",
    "EncodingFailure",
    "SchemeLaw",
    "SimConfig",
    "SimReport",
    "divergence_surrogate",
    "exact_leakage",
    "generate_codebook",
    "key_uniformity_exact",
    "likelihood_encode",
    "run_trials",
    "typicality_decode",
]
