"""
Least-squares baseline and the constrained dual-ascent estimator (DES).

The constrained problem is

    min_x ||y - A x||^2   s.t.  C1': b^T x^* <= 0,   C2': x^H C x <= 0

with ``x = [h, eta]``, ``b = [0, -1]`` and ``C = diag(1, -1)``. DES alternates
the closed-form Lagrangian minimizer

    x = (A^H A + delta C)^{-1} (A^H y - b lambda)

with projected ascent steps on the multipliers. Because ``C`` is indefinite the
minimizer only exists while ``A^H A + delta C`` is positive definite, so
multiplier steps that would leave that region are halved (see
:class:`DualAscentConfig`).

All routines accept a batch of observations sharing one design matrix. Every
operation is elementwise across the batch, so a trial produces bit-identical
output whether it is solved alone or together with others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidParameterError, SingularMatrixError
from .numerics import det_2x2, row_scale_2x2, solve_2x2

#: Linear-constraint vector of C1' and the indefinite matrix of C2'.
B_VEC = np.array([0.0, -1.0])
C_MAT = np.diag([1.0, -1.0])

SCHEDULES = ("constant", "diminishing")


@dataclass(frozen=True)
class ParameterVector:
    """Estimate of ``x = [h, eta]``; ``eta_hat`` stays complex while iterating."""

    h_hat: complex
    eta_hat: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.h_hat, self.eta_hat], dtype=complex)

    @property
    def real_parts(self) -> tuple[float, float, float]:
        """The ``(Re h, Im h, eta)`` triple compared against the CRLBs; eta is read as its real part."""
        return (self.h_hat.real, self.h_hat.imag, self.eta_hat.real)


@dataclass(frozen=True)
class DualAscentConfig:
    """
    Settings of the dual-ascent iteration.

    Attributes
    ----------
    eps0, tau0 : float
        Stepsizes for ``lambda`` (C1') and ``delta`` (C2'). Zero is allowed
        and freezes the corresponding multiplier.
    t_max : int
        Maximum number of multiplier updates.
    tol : float
        Convergence threshold on ``max(|d lambda|, |d delta|, ||d x||_inf)``.
    lambda0, delta0 : float
        Initial multipliers.
    feas_tol : float
        A converged run must also satisfy both constraints to this tolerance.
    schedule : {"constant", "diminishing"}
        ``"diminishing"`` scales both stepsizes by ``1/sqrt(t)`` at update t.
    pd_margin : float
        A ``delta`` step is accepted only while
        ``det(M)/rowscale(M) >= pd_margin * det(G)/rowscale(G)`` for
        ``M = A^H A + delta C`` and ``G = A^H A``.
    max_backoffs : int
        Number of step halvings tried before a run is stopped as non-converged.
    """

    eps0: float = 0.1
    tau0: float = 0.1
    t_max: int = 50
    tol: float = 1e-3
    lambda0: float = 0.0
    delta0: float = 0.0
    feas_tol: float = 1e-3
    schedule: str = "constant"
    pd_margin: float = 0.1
    max_backoffs: int = 10

    def __post_init__(self):
        for name in ("eps0", "tau0", "lambda0", "delta0"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {v}")
        for name in ("tol", "feas_tol"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be > 0, got {v}")
        if int(self.t_max) != self.t_max or self.t_max < 1:
            raise InvalidParameterError(f"t_max must be a positive integer, got {self.t_max}")
        if self.schedule not in SCHEDULES:
            raise InvalidParameterError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if not 0 < self.pd_margin < 1:
            raise InvalidParameterError(f"pd_margin must lie in (0, 1), got {self.pd_margin}")
        if int(self.max_backoffs) != self.max_backoffs or self.max_backoffs < 0:
            raise InvalidParameterError(f"max_backoffs must be a non-negative integer, got {self.max_backoffs}")

    def stepsizes(self, t: int) -> tuple[float, float]:
        """Stepsizes used for the t-th multiplier update (t >= 1)."""
        if self.schedule == "diminishing":
            s = 1.0 / math.sqrt(t)
            return self.eps0 * s, self.tau0 * s
        return self.eps0, self.tau0


@dataclass(frozen=True, eq=False)
class EstimationResult:
    """
    Output of one DES run.

    ``lambda_trace``, ``delta_trace`` and ``x_trace`` hold ``iterations + 1``
    entries; entry k is the multiplier pair after k updates and the Lagrangian
    minimizer at that pair. ``c1_violation`` / ``c2_violation`` are the signed
    constraint values at ``x_hat`` (non-positive means satisfied).
    """

    x_hat: ParameterVector
    iterations: int
    converged: bool
    lambda_trace: np.ndarray
    delta_trace: np.ndarray
    c1_violation: float
    c2_violation: float
    x_trace: np.ndarray = field(repr=False)
    stopped: bool = False

    @property
    def eta_imag(self) -> float:
        """Imaginary part of the final eta estimate, kept as a diagnostic."""
        return self.x_hat.eta_hat.imag


@dataclass(frozen=True, eq=False)
class BatchEstimate:
    """DES results for a batch; traces are NaN-padded to ``t_max + 1`` columns when kept."""

    x_hat: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    stopped: np.ndarray
    lambda_final: np.ndarray
    delta_final: np.ndarray
    lambda_trace: np.ndarray | None = None
    delta_trace: np.ndarray | None = None
    x_trace: np.ndarray | None = None

    def __len__(self):
        return self.x_hat.shape[0]

    def result(self, i: int) -> EstimationResult:
        """Unpack trial ``i`` into an :class:`EstimationResult` (needs traces)."""
        if self.lambda_trace is None:
            raise ValueError("batch was computed without traces")
        n = int(self.iterations[i]) + 1
        x = self.x_hat[i]
        c1, c2 = constraint_violation(x)
        return EstimationResult(
            x_hat=ParameterVector(complex(x[0]), complex(x[1])),
            iterations=int(self.iterations[i]),
            converged=bool(self.converged[i]),
            lambda_trace=self.lambda_trace[i, :n].copy(),
            delta_trace=self.delta_trace[i, :n].copy(),
            c1_violation=c1,
            c2_violation=c2,
            x_trace=self.x_trace[i, :n].copy(),
            stopped=bool(self.stopped[i]),
        )


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[1] != 2 or A.shape[0] < 2:
        raise DimensionError(f"design matrix must be K x 2 with K >= 2, got shape {A.shape}")
    return A


def _as_batch(A, Y) -> tuple[np.ndarray, np.ndarray, bool]:
    A = _as_matrix(A)
    Y = np.asarray(Y, dtype=complex)
    single = Y.ndim == 1
    Y = np.atleast_2d(Y)
    if Y.ndim != 2 or Y.shape[1] != A.shape[0]:
        raise DimensionError(f"observations of length {Y.shape[-1]} do not match design matrix rows {A.shape[0]}")
    return A, Y, single


def normal_equations(A, Y) -> tuple[np.ndarray, np.ndarray]:
    """
    Gram matrix ``A^H A`` and right-hand sides ``A^H y`` for each row of ``Y``.

    The products are accumulated row by row in a fixed order rather than
    through BLAS, so each trial's result does not depend on the batch size.
    """
    A, Y, _ = _as_batch(A, Y)
    G = np.array([[np.vdot(A[:, i], A[:, j]) for j in range(2)] for i in range(2)])
    V = np.zeros((Y.shape[0], 2), dtype=complex)
    Ac = A.conj()
    for k in range(A.shape[0]):
        V[:, 0] += Ac[k, 0] * Y[:, k]
        V[:, 1] += Ac[k, 1] * Y[:, k]
    return G, V


def _lagrangian_system(G, delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    M = np.empty(delta.shape + (2, 2), dtype=complex)
    M[..., 0, 0] = G[0, 0] + delta
    M[..., 0, 1] = G[0, 1]
    M[..., 1, 0] = G[1, 0]
    M[..., 1, 1] = G[1, 1] - delta
    return M


def _lagrangian_rhs(V, lam) -> np.ndarray:
    # A^H y - b*lambda with b = [0, -1]
    rhs = V.copy()
    rhs[..., 1] = V[..., 1] + lam
    return rhs


def _pd_ratio(M) -> np.ndarray:
    return det_2x2(M).real / row_scale_2x2(M)


def _violations(X) -> tuple[np.ndarray, np.ndarray]:
    h, eta = X[..., 0], X[..., 1]
    c1 = -eta.real
    c2 = (h.real * h.real + h.imag * h.imag) - (eta.real * eta.real + eta.imag * eta.imag)
    return c1, c2


def _modulus(z) -> np.ndarray:
    return np.sqrt(z.real * z.real + z.imag * z.imag)


def constraint_violation(x) -> tuple[float, float]:
    """
    Signed values of C1' and C2' at ``x`` (a :class:`ParameterVector` or length-2 array).

    ``c1 = -Re(eta)`` and ``c2 = |h|^2 - |eta|^2``; non-positive means satisfied.
    """
    if isinstance(x, ParameterVector):
        x = x.as_array()
    x = np.asarray(x, dtype=complex)
    if x.shape != (2,):
        raise DimensionError(f"expected a length-2 parameter vector, got shape {x.shape}")
    c1, c2 = _violations(x)
    return float(c1), float(c2)


def ls_estimate_batch(A, Y) -> np.ndarray:
    """Unconstrained least squares for every row of ``Y``; returns shape ``(n, 2)``."""
    G, V = normal_equations(A, Y)
    return solve_2x2(np.broadcast_to(G, (V.shape[0], 2, 2)), V)


def ls_estimate(A, y) -> ParameterVector:
    """``(A^H A)^{-1} A^H y`` for a single observation vector."""
    A, Y, _ = _as_batch(A, y)
    if Y.shape[0] != 1:
        raise DimensionError("ls_estimate takes one observation; use ls_estimate_batch")
    x = ls_estimate_batch(A, Y)[0]
    return ParameterVector(complex(x[0]), complex(x[1]))


def des_estimate_batch(A, Y, cfg: DualAscentConfig | None = None, keep_traces: bool = False) -> BatchEstimate:
    """
    Run the dual-ascent estimator on every row of ``Y``.

    Each update computes projected multiplier steps from the current iterate,
    halves the ``delta`` step while the Lagrangian Hessian would leave the
    positive-definite region (up to ``cfg.max_backoffs`` times), then solves for
    the new minimizer. A trial converges once the combined change falls below
    ``cfg.tol`` with both constraints within ``cfg.feas_tol``. Trials whose
    backoffs run out are frozen at their last accepted iterate and flagged in
    ``stopped``.
    """
    cfg = cfg or DualAscentConfig()
    A, Y, _ = _as_batch(A, Y)
    G, V = normal_equations(A, Y)
    n = V.shape[0]
    T = int(cfg.t_max)

    floor = cfg.pd_margin * _pd_ratio(G)
    if not floor > 0:
        raise SingularMatrixError("A^H A is not positive definite; both pilot blocks need energy")

    lam = np.full(n, float(cfg.lambda0))
    dl = np.full(n, float(cfg.delta0))
    M0 = _lagrangian_system(G, dl)
    if not np.all(_pd_ratio(M0) >= floor):
        raise InvalidParameterError(f"delta0={cfg.delta0} leaves the positive-definite region of A^H A + delta C")
    x = solve_2x2(M0, _lagrangian_rhs(V, lam))

    iterations = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    stopped = np.zeros(n, dtype=bool)
    if keep_traces:
        lt = np.full((n, T + 1), np.nan)
        dt = np.full((n, T + 1), np.nan)
        xt = np.full((n, T + 1, 2), np.nan, dtype=complex)
        lt[:, 0], dt[:, 0], xt[:, 0] = lam, dl, x

    active = np.arange(n)
    for t in range(1, T + 1):
        if active.size == 0:
            break
        eps, tau = cfg.stepsizes(t)
        xa, la, da = x[active], lam[active], dl[active]
        c1, c2 = _violations(xa)

        ln = np.maximum(0.0, la + eps * c1)
        step = tau * c2
        dn = np.maximum(0.0, da + step)
        M = _lagrangian_system(G, dn)
        ok = _pd_ratio(M) >= floor
        for _ in range(cfg.max_backoffs):
            if ok.all():
                break
            bad = ~ok
            step[bad] *= 0.5
            dn[bad] = np.maximum(0.0, da[bad] + step[bad])
            M[bad] = _lagrangian_system(G, dn[bad])
            ok[bad] = _pd_ratio(M[bad]) >= floor

        if not ok.all():
            stopped[active[~ok]] = True
        idx = active[ok]
        if idx.size == 0:
            active = idx
            break
        ln, dn, M, xa, la, da = ln[ok], dn[ok], M[ok], xa[ok], la[ok], da[ok]
        xn = solve_2x2(M, _lagrangian_rhs(V[idx], ln))

        dx = _modulus(xn - xa)
        change = np.maximum(np.maximum(np.abs(ln - la), np.abs(dn - da)), np.maximum(dx[:, 0], dx[:, 1]))
        x[idx], lam[idx], dl[idx] = xn, ln, dn
        iterations[idx] = t
        if keep_traces:
            lt[idx, t], dt[idx, t], xt[idx, t] = ln, dn, xn

        v1, v2 = _violations(xn)
        done = (change < cfg.tol) & (v1 <= cfg.feas_tol) & (v2 <= cfg.feas_tol)
        converged[idx[done]] = True
        active = idx[~done]

    return BatchEstimate(
        x_hat=x,
        iterations=iterations,
        converged=converged,
        stopped=stopped,
        lambda_final=lam,
        delta_final=dl,
        lambda_trace=lt if keep_traces else None,
        delta_trace=dt if keep_traces else None,
        x_trace=xt if keep_traces else None,
    )


def des_estimate(A, y, cfg: DualAscentConfig | None = None) -> EstimationResult:
    """Dual-ascent estimate for one observation vector, with full traces."""
    A, Y, _ = _as_batch(A, y)
    if Y.shape[0] != 1:
        raise DimensionError("des_estimate takes one observation; use des_estimate_batch")
    return des_estimate_batch(A, Y, cfg, keep_traces=True).result(0)


def lagrangian_stationarity(A, y, x, lam: float, delta: float) -> float:
    """``||(A^H A + delta C) x - (A^H y - lambda b)||_inf`` for a single point."""
    G, V = normal_equations(A, np.asarray(y, dtype=complex)[None, :])
    x = np.asarray(x.as_array() if isinstance(x, ParameterVector) else x, dtype=complex)
    M = _lagrangian_system(G, delta)
    r = M @ x - _lagrangian_rhs(V[0], lam)
    return float(np.max(np.abs(r)))


def kkt_residuals(A, y, result: EstimationResult) -> tuple[float, float, float]:
    """
    Stationarity and complementary-slackness residuals at the final iterate.

    Returns ``(stationarity, |lambda * c1|, |delta * c2|)`` using the last
    multipliers in the result's traces.
    """
    lam = float(result.lambda_trace[-1])
    delta = float(result.delta_trace[-1])
    c1, c2 = constraint_violation(result.x_hat)
    stat = lagrangian_stationarity(A, y, result.x_hat, lam, delta)
    return stat, abs(lam * c1), abs(delta * c2)
