"""Preference-based scalarization functions and their subgradients.

Each function collapses an objective vector ``f`` to a scalar given a
preference vector ``p`` and returns ``(value, gradient)`` where the gradient
is taken with respect to ``f``. Ties at max/min operators break toward the
lowest index so the subgradients are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IdealPoint",
    "weighted_sum",
    "tchebycheff",
    "modified_tchebycheff",
    "cosmos",
    "hv_scalarization",
]

# Preference components below this are clamped before division.
PREFERENCE_CLAMP = 1e-6


@dataclass
class IdealPoint:
    """Running componentwise minimum of observed objective vectors.

    ``epsilon`` is the small positive shift subtracted from the minimum in
    the Tchebycheff-style losses.
    """

    z: np.ndarray
    epsilon: float = 0.1

    def update(self, objectives) -> None:
        pts = np.atleast_2d(np.asarray(objectives, dtype=float))
        self.z = np.minimum(self.z, pts.min(axis=0))


def _check_dims(f: np.ndarray, p: np.ndarray) -> None:
    if f.shape != p.shape:
        raise ValueError(f"objective vector shape {f.shape} != preference shape {p.shape}")


def weighted_sum(f, p):
    """g = sum_i p_i f_i; gradient is p itself."""
    f = np.asarray(f, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_dims(f, p)
    return float(p @ f), p.copy()


def tchebycheff(f, p, ideal: IdealPoint):
    """g = max_i p_i (f_i - (z_i - eps)); subgradient p_i* at the argmax."""
    f = np.asarray(f, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_dims(f, p)
    terms = p * (f - (ideal.z - ideal.epsilon))
    i_star = int(np.argmax(terms))
    grad = np.zeros_like(f)
    grad[i_star] = p[i_star]
    return float(terms[i_star]), grad


def modified_tchebycheff(f, p, ideal: IdealPoint):
    """g = max_i (f_i - (z_i - eps)) / p_i; subgradient 1/p_i* at the argmax."""
    f = np.asarray(f, dtype=float)
    p = np.maximum(np.asarray(p, dtype=float), PREFERENCE_CLAMP)
    _check_dims(f, p)
    terms = (f - (ideal.z - ideal.epsilon)) / p
    i_star = int(np.argmax(terms))
    grad = np.zeros_like(f)
    grad[i_star] = 1.0 / p[i_star]
    return float(terms[i_star]), grad


def cosmos(f, p, gamma: float = 1.0):
    """g = sum_i p_i f_i - gamma * cos(p, f), with exact analytic gradient.

    When ``f`` is the zero vector the cosine term is treated as 0 with zero
    gradient.
    """
    f = np.asarray(f, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_dims(f, p)
    value = float(p @ f)
    grad = p.copy()
    norm_f = np.linalg.norm(f)
    norm_p = np.linalg.norm(p)
    if norm_f > 0.0 and norm_p > 0.0:
        dot = float(p @ f)
        cos = dot / (norm_p * norm_f)
        value -= gamma * cos
        # d cos / df = p / (|p||f|) - (p.f) f / (|p| |f|^3)
        dcos = p / (norm_p * norm_f) - dot * f / (norm_p * norm_f**3)
        grad -= gamma * dcos
    return value, grad


def hv_scalarization(f, direction, ref):
    """Projected distance min_i (r_i - f_i) / lambda_i along one direction.

    Returns ``(s, grad, inside)`` where ``grad`` is the subgradient of ``s``
    (so a trainer maximizing ``s`` minimizes ``-s`` with gradient ``-grad``)
    and ``inside`` flags whether ``f`` strictly dominates the reference point.
    When it does not, the (negative) quotient is returned as-is; the training
    signal still pushes the point inward.
    """
    f = np.asarray(f, dtype=float)
    lam = np.maximum(np.asarray(direction, dtype=float), PREFERENCE_CLAMP)
    r = np.asarray(ref, dtype=float)
    _check_dims(f, lam)
    quotients = (r - f) / lam
    i_star = int(np.argmin(quotients))
    grad = np.zeros_like(f)
    grad[i_star] = -1.0 / lam[i_star]
    inside = bool(np.all(f < r))
    return float(quotients[i_star]), grad, inside
