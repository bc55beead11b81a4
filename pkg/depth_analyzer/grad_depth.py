"""Gradient-weighted effective depth from a path polynomial.

No training happens here, so the per-path gradient magnitude g(p) is
modelled: either as gamma ** length (attenuation model) or as a
user-supplied weight per length. Paths of equal length share one weight,
which makes the polynomial a sufficient statistic.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .depth_metrics import AnalysisError, EmptyPolynomialError, PathPolynomial
from .number_utils import DEPTH_PLACES, to_decimal

logger = logging.getLogger(__name__)

DEFAULT_GAMMAS = (1.0, 0.9, 0.7, 0.5)


class AttenuationModelError(AnalysisError, ValueError):
    """Custom exception for an out-of-range attenuation factor."""
    pass


class CustomWeightsError(AnalysisError, ValueError):
    """Custom exception for unusable per-length weights."""
    pass


@dataclass(frozen=True)
class AttenuationModel:
    gamma: float

    def __post_init__(self):
        if not isinstance(self.gamma, (int, float)) or not (0.0 < self.gamma <= 1.0):
            raise AttenuationModelError(f"gamma must lie in (0, 1], got {self.gamma!r}")

    @property
    def label(self) -> str:
        return f"attenuation({self.gamma})"


@dataclass(frozen=True)
class WeightedDepthReport:
    model: str
    gamma: float | None
    d_eff_grad: float
    weight_mass: Mapping[int, float]

    @property
    def decimal(self):
        return to_decimal(self.d_eff_grad, DEPTH_PLACES)


def _weighted_mean(poly: PathPolynomial, log_weights: np.ndarray, label: str, gamma) -> WeightedDepthReport:
    lengths = np.array(poly.support, dtype=float)
    # Log-domain normalization: counts may exceed float range and gamma**l may underflow.
    log_counts = np.array([math.log(c) for _, c in poly.terms], dtype=float)
    log_mass = log_counts + log_weights
    finite = np.isfinite(log_mass)
    if not finite.any():
        raise CustomWeightsError("all path weights are zero")
    shifted = np.where(finite, log_mass - log_mass[finite].max(), -np.inf)
    mass = np.exp(shifted)
    mass /= mass.sum()
    depth = float(np.dot(mass, lengths))
    # Clamp rounding noise so the result stays inside [l_min, l_max].
    depth = min(max(depth, float(poly.l_min)), float(poly.l_max))
    weight_mass = {length: float(m) for length, m in zip(poly.support, mass)}
    return WeightedDepthReport(model=label, gamma=gamma, d_eff_grad=depth, weight_mass=weight_mass)


def gradient_weighted_depth(poly: PathPolynomial, model: AttenuationModel) -> WeightedDepthReport:
    """Effective depth with path weights gamma ** length, normalized over all paths."""
    if not poly:
        raise EmptyPolynomialError("path polynomial is empty (no input-output paths)")
    log_weights = np.array(poly.support, dtype=float) * math.log(model.gamma)
    return _weighted_mean(poly, log_weights, model.label, model.gamma)


def gradient_weighted_depth_custom(poly: PathPolynomial, weights: Mapping[int, float]) -> WeightedDepthReport:
    """Effective depth with caller-supplied per-length weights g(length)."""
    if not poly:
        raise EmptyPolynomialError("path polynomial is empty (no input-output paths)")
    missing = [l for l in poly.support if l not in weights]
    if missing:
        raise CustomWeightsError(f"weights missing for path length(s) {', '.join(map(str, missing))}")
    values = []
    for length in poly.support:
        w = float(weights[length])
        if w < 0 or math.isnan(w):
            raise CustomWeightsError(f"weight for length {length} must be non-negative, got {weights[length]!r}")
        values.append(math.log(w) if w > 0 else -math.inf)
    return _weighted_mean(poly, np.array(values, dtype=float), "custom", None)


def gamma_sweep(poly: PathPolynomial, gammas=DEFAULT_GAMMAS) -> list[WeightedDepthReport]:
    return [gradient_weighted_depth(poly, AttenuationModel(g)) for g in gammas]
