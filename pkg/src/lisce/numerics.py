"""
Small linear-algebra kernels and the deterministic random-stream contract.

Everything here is sized for the problem at hand: 2x2 complex systems for the
estimator updates and 3x3 real symmetric matrices for Fisher information.
The 2x2 routines broadcast over leading axes so a whole batch of Monte Carlo
trials can be solved in one call.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError, SingularMatrixError

#: Relative determinant threshold below which a matrix is treated as singular.
SINGULARITY_RTOL = 1e-12

#: Name of the bit generator backing :class:`RandomStream`. Recorded in run
#: manifests so CSV outputs can be reproduced exactly.
RNG_ALGORITHM = "Philox4x64-10 (numpy.random.Philox), key = (master_seed, stream_id)"

_U64 = 2**64


class RandomStream:
    """
    Counter-based random substream identified by ``(master_seed, stream_id)``.

    Each pair maps to its own Philox key with the counter starting at zero, so
    the k-th draw of a stream depends only on the pair and ``k``. It does not
    matter how many other streams exist or in which order they are consumed.

    Parameters
    ----------
    master_seed : int
        Experiment-level seed, reduced modulo 2**64.
    stream_id : int
        Substream index (the harness uses the trial index).
    """

    __slots__ = ("master_seed", "stream_id", "_gen")

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed) % _U64
        self.stream_id = int(stream_id) % _U64
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def standard_normal(self, size=None) -> np.ndarray | float:
        return self._gen.standard_normal(size)

    def spawn(self, stream_id: int) -> "RandomStream":
        """Another substream under the same master seed."""
        return RandomStream(self.master_seed, stream_id)

    def __repr__(self):
        return f"RandomStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


def _check_finite_complex(z, name):
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidParameterError(f"{name} must be finite, got {z!r}")


def sample_complex_gaussian(mean: complex, variance: float, rng: RandomStream) -> complex:
    """
    Draw one circularly symmetric complex Gaussian value CN(mean, variance).

    ``variance`` is the total variance E|z - mean|^2; the real and imaginary
    parts each receive half of it. Two standard normals are always consumed
    (real part first) so stream positions do not depend on the variance.
    """
    mean = complex(mean)
    _check_finite_complex(mean, "mean")
    if not variance >= 0:
        raise InvalidParameterError(f"variance must be >= 0, got {variance}")
    re, im = rng.standard_normal(2)
    if variance == 0:
        return mean
    scale = math.sqrt(variance / 2.0)
    return complex(mean.real + scale * re, mean.imag + scale * im)


def sample_complex_gaussian_vector(n: int, variance: float, rng: RandomStream) -> np.ndarray:
    """Draw ``n`` i.i.d. CN(0, variance) values; consumes ``2n`` normals (re, im interleaved)."""
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    if not variance >= 0:
        raise InvalidParameterError(f"variance must be >= 0, got {variance}")
    z = rng.standard_normal((n, 2))
    if variance == 0:
        return np.zeros(n, dtype=complex)
    scale = math.sqrt(variance / 2.0)
    return scale * z[:, 0] + 1j * (scale * z[:, 1])


def det_2x2(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M)
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def row_scale_2x2(M: np.ndarray) -> np.ndarray:
    """Product of the row max-norms, the reference scale for the singularity test."""
    a = np.abs(np.asarray(M))
    return np.maximum(a[..., 0, 0], a[..., 0, 1]) * np.maximum(a[..., 1, 0], a[..., 1, 1])


def solve_2x2(M, v) -> np.ndarray:
    """
    Solve ``M @ x = v`` for 2x2 (complex) ``M`` by Cramer's rule.

    Broadcasts over leading axes: ``M`` has shape ``(..., 2, 2)`` and ``v``
    shape ``(..., 2)``. Raises :class:`SingularMatrixError` if any system has
    ``|det| < 1e-12 * (product of row max-norms)``.
    """
    M = np.asarray(M)
    v = np.asarray(v)
    if M.shape[-2:] != (2, 2) or v.shape[-1:] != (2,):
        raise InvalidParameterError(f"expected (...,2,2) and (...,2), got {M.shape} and {v.shape}")
    det = det_2x2(M)
    scale = row_scale_2x2(M)
    bad = ~(np.abs(det) >= SINGULARITY_RTOL * scale) | (scale == 0)
    if np.any(bad):
        worst = np.min(np.abs(det)) if np.ndim(det) else abs(det)
        raise SingularMatrixError(f"2x2 system is singular (|det| = {worst:.3e})", det=float(worst))
    x0 = (M[..., 1, 1] * v[..., 0] - M[..., 0, 1] * v[..., 1]) / det
    x1 = (M[..., 0, 0] * v[..., 1] - M[..., 1, 0] * v[..., 0]) / det
    return np.stack([x0, x1], axis=-1)


def invert_3x3(M) -> np.ndarray:
    """
    Inverse of a real 3x3 matrix via the adjugate; singular input raises.

    Extended-precision input (``np.longdouble``) is inverted in that precision.
    """
    M = np.asarray(M)
    M = M.astype(np.result_type(M.dtype, np.float64))
    if M.shape != (3, 3):
        raise InvalidParameterError(f"expected a 3x3 matrix, got shape {M.shape}")
    (a, b, c), (d, e, f), (g, h, i) = M
    cof = np.array(
        [
            [e * i - f * h, -(d * i - f * g), d * h - e * g],
            [-(b * i - c * h), a * i - c * g, -(a * h - b * g)],
            [b * f - c * e, -(a * f - c * d), a * e - b * d],
        ]
    )
    det = a * cof[0, 0] + b * cof[0, 1] + c * cof[0, 2]
    scale = np.prod(np.max(np.abs(M), axis=1))
    if scale == 0 or not abs(det) >= SINGULARITY_RTOL * scale:
        raise SingularMatrixError(f"3x3 matrix is singular (|det| = {abs(det):.3e})", det=float(abs(det)))
    return cof.T / det
