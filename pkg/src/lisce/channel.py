"""Channel realizations: direct link h, surface amplitudes and the assistant channel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidParameterError
from .numerics import RandomStream, sample_complex_gaussian, sample_complex_gaussian_vector

ETA_CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True)
class ChannelParams:
    """Variances of h, f, g and the number of reflecting elements."""

    sigma_h2: float = 1 / 64
    sigma_f2: float = 1 / 25
    sigma_g2: float = 1 / 9
    n_elements: int = 32

    def __post_init__(self):
        # sigma_h2 = 0 is allowed as the degenerate "no direct path" case
        if not (self.sigma_h2 >= 0 and math.isfinite(self.sigma_h2)):
            raise InvalidParameterError(f"sigma_h2 must be a non-negative finite number, got {self.sigma_h2}")
        for name in ("sigma_f2", "sigma_g2"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be a positive finite number, got {v}")
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise InvalidParameterError(f"n_elements must be a positive integer, got {self.n_elements}")


def assistant_channel(f_amp, g_amp) -> float:
    """Assistant channel gain: inner product of the two amplitude vectors."""
    f_amp = np.asarray(f_amp, dtype=float)
    g_amp = np.asarray(g_amp, dtype=float)
    if f_amp.shape != g_amp.shape or f_amp.ndim != 1:
        raise DimensionError(f"amplitude vectors must be 1-D of equal length, got {f_amp.shape} and {g_amp.shape}")
    if np.any(f_amp < 0) or np.any(g_amp < 0):
        raise InvalidParameterError("amplitudes must be non-negative")
    return float(np.dot(f_amp, g_amp))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """
    One channel draw.

    ``eta`` must agree with ``assistant_channel(f_amp, g_amp)`` to within
    1e-12 (relative to its magnitude); construction fails otherwise.
    """

    h: complex
    f_amp: np.ndarray
    g_amp: np.ndarray
    eta: float

    def __post_init__(self):
        f = np.asarray(self.f_amp, dtype=float)
        g = np.asarray(self.g_amp, dtype=float)
        object.__setattr__(self, "f_amp", f)
        object.__setattr__(self, "g_amp", g)
        object.__setattr__(self, "h", complex(self.h))
        expected = assistant_channel(f, g)
        if abs(expected - self.eta) > ETA_CONSISTENCY_TOL * max(1.0, abs(expected)):
            raise InvalidParameterError(f"stored eta {self.eta!r} disagrees with amplitudes ({expected!r})")

    @classmethod
    def from_amplitudes(cls, h, f_amp, g_amp) -> "ChannelRealization":
        return cls(h, f_amp, g_amp, assistant_channel(f_amp, g_amp))

    @property
    def n_elements(self) -> int:
        return self.f_amp.shape[0]

    @property
    def assistant_dominates(self) -> bool:
        """Whether the draw itself satisfies eta > |h|."""
        return self.eta > abs(self.h)


def sample_channel(params: ChannelParams, rng: RandomStream) -> ChannelRealization:
    """
    Draw h ~ CN(0, sigma_h2) and Rayleigh amplitudes of f and g.

    Draw order on the stream is fixed: h, then the N entries of f, then g.
    """
    h = sample_complex_gaussian(0j, params.sigma_h2, rng)
    f = np.abs(sample_complex_gaussian_vector(params.n_elements, params.sigma_f2, rng))
    g = np.abs(sample_complex_gaussian_vector(params.n_elements, params.sigma_g2, rng))
    return ChannelRealization.from_amplitudes(h, f, g)
