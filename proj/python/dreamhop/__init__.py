"""Dreaming Hopfield couplings: spectral and retrieval theory with Monte Carlo checks."""

from ._core import (
    PROJECTOR_TIME,
    CurvePoint,
    DomainError,
    NumericalError,
    ResourceError,
    Scenario,
    ShapeError,
    SpectralLaw,
    coupling,
    eigen_map,
    eigen_map_inverse,
    eigenvalues,
    examples,
    git_blob_sha1,
    ground_truths,
    law,
    m1_theory,
    moments,
    predict_curve,
    se_theory,
    simulate_retrieval,
    verify,
)

__all__ = [
    "PROJECTOR_TIME",
    "CurvePoint",
    "DomainError",
    "NumericalError",
    "ResourceError",
    "Scenario",
    "ShapeError",
    "SpectralLaw",
    "coupling",
    "eigen_map",
    "eigen_map_inverse",
    "eigenvalues",
    "examples",
    "git_blob_sha1",
    "ground_truths",
    "law",
    "m1_theory",
    "moments",
    "predict_curve",
    "se_theory",
    "simulate_retrieval",
    "verify",
]
