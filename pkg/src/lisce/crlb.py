"""
Fisher information and Cramer-Rao bounds for ``z = [Re h, Im h, eta]``.

Bounds depend on the pilots only through the block energies
``a = s_p1^H s_p1`` and ``b = s_p2^H s_p2``. They are available in closed form
and, independently, as the diagonal of the numerically inverted FIM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .numerics import invert_3x3
from .signal import PilotFrame, build_design_matrix

COMPONENTS = ("re_h", "im_h", "eta")


@dataclass(frozen=True)
class RealParamVector:
    re_h: float
    im_h: float
    eta: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.re_h, self.im_h, self.eta)):
            raise InvalidParameterError("parameter components must be finite")

    @classmethod
    def from_complex(cls, h: complex, eta) -> "RealParamVector":
        return cls(complex(h).real, complex(h).imag, float(np.real(eta)))


@dataclass(frozen=True)
class CrlbBundle:
    """Variance lower bounds for Re(h), Im(h) and eta."""

    re_h_bound: float
    im_h_bound: float
    eta_bound: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.re_h_bound, self.im_h_bound, self.eta_bound)

    def by_component(self) -> dict[str, float]:
        return dict(zip(COMPONENTS, self.as_tuple()))


def _check_positive(**kwargs):
    for name, v in kwargs.items():
        if not (v > 0 and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be a positive finite number, got {v}")


def fim(energy1: float, energy2: float, sigma_w2: float, dtype=np.float64) -> np.ndarray:
    """FIM of ``z`` for pilot energies ``a``, ``b`` and noise variance ``sigma_w2``."""
    _check_positive(energy1=energy1, energy2=energy2, sigma_w2=sigma_w2)
    a, b, s = dtype(energy1), dtype(energy2), dtype(sigma_w2)
    return (dtype(2) / s) * np.array(
        [
            [a + b, 0, b],
            [0, a + b, 0],
            [b, 0, b],
        ],
        dtype=dtype,
    )


def fim_gaussian_linear(jacobian, sigma_w2: float) -> np.ndarray:
    """
    FIM of a real parameter vector for ``y ~ CN(mu(theta), sigma_w2 I)``.

    With a parameter-independent covariance the trace term vanishes and
    ``F[m, n] = (2 / sigma_w2) Re(J[:, m]^H J[:, n])``.

    Parameters
    ----------
    jacobian : array_like, shape (K, p)
        Complex derivatives of the mean with respect to each parameter.
    sigma_w2 : float
        Noise variance (> 0).
    """
    _check_positive(sigma_w2=sigma_w2)
    J = np.asarray(jacobian, dtype=complex)
    if J.ndim != 2:
        raise InvalidParameterError(f"jacobian must be 2-D, got shape {J.shape}")
    return (2.0 / sigma_w2) * (J.conj().T @ J).real


def mean_jacobian(frame_or_matrix) -> np.ndarray:
    """Columns ``(a1, j a1, a2)``: derivatives of ``A x`` with respect to ``z``."""
    A = build_design_matrix(frame_or_matrix) if isinstance(frame_or_matrix, PilotFrame) else np.asarray(frame_or_matrix)
    return np.column_stack([A[:, 0], 1j * A[:, 0], A[:, 1]])


def crlb_closed_form(energy1: float, energy2: float, sigma_w2: float) -> CrlbBundle:
    _check_positive(energy1=energy1, energy2=energy2, sigma_w2=sigma_w2)
    a, b = energy1, energy2
    return CrlbBundle(
        re_h_bound=sigma_w2 / (2 * a),
        im_h_bound=sigma_w2 / (2 * (a + b)),
        eta_bound=sigma_w2 / (2 * a) + sigma_w2 / (2 * b),
    )


def crlb_numeric(energy1: float, energy2: float, sigma_w2: float) -> CrlbBundle:
    """
    Diagonal of the inverted FIM; an independent check on :func:`crlb_closed_form`.

    The FIM is formed and inverted in extended precision. For very unequal
    energies the entry ``a + b`` loses the information about the smaller
    energy that the eta bound depends on, which costs about ``eps * b / a`` in
    double precision.
    """
    d = np.diag(invert_3x3(fim(energy1, energy2, sigma_w2, dtype=np.longdouble)))
    return CrlbBundle(float(d[0]), float(d[1]), float(d[2]))


def crlb_for_frame(frame: PilotFrame, sigma_w2: float) -> CrlbBundle:
    return crlb_closed_form(frame.energy1, frame.energy2, sigma_w2)
