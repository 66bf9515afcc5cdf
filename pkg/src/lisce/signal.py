"""Pilot frames, the stacked design matrix, observation synthesis and SNR bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .errors import InvalidParameterError
from .numerics import RandomStream, sample_complex_gaussian_vector


@dataclass(frozen=True, eq=False)
class PilotFrame:
    """
    Pilot symbols sent while the surface is off (``s_p1``) and on (``s_p2``).

    ``slot_indices_1`` / ``slot_indices_2`` are layout metadata only; they
    never enter the design matrix.
    """

    s_p1: np.ndarray
    s_p2: np.ndarray
    slot_indices_1: tuple | None = field(default=None, compare=False)
    slot_indices_2: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        s1 = np.atleast_1d(np.asarray(self.s_p1, dtype=complex))
        s2 = np.atleast_1d(np.asarray(self.s_p2, dtype=complex))
        if s1.ndim != 1 or s2.ndim != 1 or s1.size < 1 or s2.size < 1:
            raise InvalidParameterError("both pilot blocks need at least one symbol")
        if not (np.all(np.isfinite(s1)) and np.all(np.isfinite(s2))):
            raise InvalidParameterError("pilot symbols must be finite")
        object.__setattr__(self, "s_p1", s1)
        object.__setattr__(self, "s_p2", s2)
        if self.energy1 <= 0 or self.energy2 <= 0:
            raise InvalidParameterError("pilot energies must be strictly positive")
        for name, n in (("slot_indices_1", s1.size), ("slot_indices_2", s2.size)):
            idx = getattr(self, name)
            if idx is not None:
                idx = tuple(int(i) for i in idx)
                if len(idx) != n:
                    raise InvalidParameterError(f"{name} has {len(idx)} entries for {n} pilots")
                object.__setattr__(self, name, idx)

    @property
    def k1(self) -> int:
        return self.s_p1.size

    @property
    def k2(self) -> int:
        return self.s_p2.size

    @property
    def energy1(self) -> float:
        return float(np.vdot(self.s_p1, self.s_p1).real)

    @property
    def energy2(self) -> float:
        return float(np.vdot(self.s_p2, self.s_p2).real)


@dataclass(frozen=True, eq=False)
class Observation:
    """Stacked received pilots ``y = [y_p1; y_p2]`` and the noise variance used."""

    y: np.ndarray
    sigma_w2: float

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=complex))
        if not self.sigma_w2 >= 0:
            raise InvalidParameterError(f"sigma_w2 must be >= 0, got {self.sigma_w2}")


def default_pilots(k1: int, k2: int) -> PilotFrame:
    """All-ones unit-modulus pilots in consecutive slots (surface-off block first)."""
    if k1 < 1 or k2 < 1:
        raise InvalidParameterError(f"k1 and k2 must both be >= 1, got k1={k1}, k2={k2}")
    return PilotFrame(
        np.ones(k1, dtype=complex),
        np.ones(k2, dtype=complex),
        tuple(range(k1)),
        tuple(range(k1, k1 + k2)),
    )


def build_design_matrix(frame: PilotFrame) -> np.ndarray:
    """The (K1+K2) x 2 matrix mapping ``[h, eta]`` to noiseless received pilots."""
    A = np.zeros((frame.k1 + frame.k2, 2), dtype=complex)
    A[: frame.k1, 0] = frame.s_p1
    A[frame.k1 :, 0] = frame.s_p2
    A[frame.k1 :, 1] = frame.s_p2
    return A


def noiseless_observation(A: np.ndarray, h: complex, eta: float) -> np.ndarray:
    # Column-wise products keep the result independent of batch layout.
    return A[:, 0] * complex(h) + A[:, 1] * complex(eta)


def synthesize_observation(
    frame: PilotFrame,
    channel: ChannelRealization,
    sigma_w2: float,
    rng: RandomStream,
) -> Observation:
    """``y = A [h, eta]^T + w`` with ``w ~ CN(0, sigma_w2 I)``; consumes 2(K1+K2) normals."""
    if not sigma_w2 >= 0:
        raise InvalidParameterError(f"sigma_w2 must be >= 0, got {sigma_w2}")
    A = build_design_matrix(frame)
    w = sample_complex_gaussian_vector(A.shape[0], sigma_w2, rng)
    return Observation(noiseless_observation(A, channel.h, channel.eta) + w, float(sigma_w2))


def snr_to_noise_variance(snr_db: float, pilot_symbol_power: float = 1.0) -> float:
    """Noise variance giving ``snr_db`` of per-pilot-symbol power over noise."""
    if not pilot_symbol_power > 0:
        raise InvalidParameterError(f"pilot_symbol_power must be > 0, got {pilot_symbol_power}")
    return pilot_symbol_power / 10 ** (snr_db / 10)


def mean_pilot_power(frame: PilotFrame) -> float:
    return (frame.energy1 + frame.energy2) / (frame.k1 + frame.k2)
