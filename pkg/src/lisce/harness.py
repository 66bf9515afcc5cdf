"""
Seeded Monte Carlo experiments: MSE versus SNR, DES-over-LS gains, MSE
differences and multiplier traces.

Trial ``i`` always draws from substream ``RandomStream(master_seed, i)``:
first the channel, then the noise. The same trial therefore sees the same
channel and the same normalized noise at every SNR and under every estimator
set. Trials are solved in blocks; since all per-trial arithmetic is
elementwise, block size and worker count do not change any result bit.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, sample_channel
from .crlb import COMPONENTS, crlb_for_frame
from .errors import IncompleteDataError, InvalidParameterError
from .estimators import DualAscentConfig, des_estimate, des_estimate_batch, ls_estimate_batch
from .numerics import RandomStream
from .signal import build_design_matrix, default_pilots, mean_pilot_power, snr_to_noise_variance, synthesize_observation

log = logging.getLogger(__name__)

ESTIMATORS = ("LS", "DES")
REFERENCE_SNR_DB = (0.0, 2.0, 4.0, 6.0, 8.0)
DEFAULT_TRIALS = 10_000
NONCONVERGED_WARN_FRACTION = 0.05
BLOCK_SIZE = 2048


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's numbers (``workers`` excepted)."""

    channel: ChannelParams = field(default_factory=ChannelParams)
    k1: int = 1
    k2: int = 1
    snr_db_list: tuple = REFERENCE_SNR_DB
    trials: int = DEFAULT_TRIALS
    master_seed: int = 1
    dual_ascent: DualAscentConfig = field(default_factory=DualAscentConfig)
    estimator_set: tuple = ESTIMATORS
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        object.__setattr__(self, "estimator_set", tuple(self.estimator_set))
        if int(self.trials) != self.trials or self.trials < 1:
            raise InvalidParameterError(f"trials must be a positive integer, got {self.trials}")
        if not self.snr_db_list:
            raise InvalidParameterError("snr_db_list must not be empty")
        if not all(math.isfinite(s) for s in self.snr_db_list):
            raise InvalidParameterError("SNR values must be finite")
        if not self.estimator_set or not set(self.estimator_set) <= set(ESTIMATORS):
            raise InvalidParameterError(f"estimator_set must be a non-empty subset of {ESTIMATORS}")
        if self.k1 < 1 or self.k2 < 1:
            raise InvalidParameterError(f"k1 and k2 must both be >= 1, got {self.k1}, {self.k2}")
        if self.workers < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {self.workers}")

    @property
    def frame(self):
        return default_pilots(self.k1, self.k2)

    def noise_variance(self, snr_db: float) -> float:
        return snr_to_noise_variance(snr_db, mean_pilot_power(self.frame))


@dataclass(frozen=True)
class MseRecord:
    """One (SNR, estimator, component) row of an experiment."""

    snr_db: float
    estimator: str
    component: str
    mse: float
    crlb: float
    trials: int
    nonconverged: int = 0
    seed: int = 0
    channel_violations: int = 0


@dataclass(frozen=True, eq=False)
class TrialOutcome:
    """Squared errors of one trial, ordered as ``(Re h, Im h, eta)`` per estimator."""

    squared_errors: dict
    des_converged: bool | None
    des_iterations: int | None
    des_stopped: bool | None
    channel_violation: bool


@dataclass(frozen=True, eq=False)
class _Block:
    errors: dict
    converged: np.ndarray | None
    iterations: np.ndarray | None
    stopped: np.ndarray | None
    violations: np.ndarray


def _draw_observations(config: ExperimentConfig, snr_db: float, trial_indices):
    frame = config.frame
    sigma_w2 = config.noise_variance(snr_db)
    m = len(trial_indices)
    Y = np.empty((m, frame.k1 + frame.k2), dtype=complex)
    truth = np.empty((m, 3))
    for row, i in enumerate(trial_indices):
        rng = RandomStream(config.master_seed, int(i))
        ch = sample_channel(config.channel, rng)
        Y[row] = synthesize_observation(frame, ch, sigma_w2, rng).y
        truth[row] = (ch.h.real, ch.h.imag, ch.eta)
    return build_design_matrix(frame), Y, truth


def _squared_errors(X, truth) -> np.ndarray:
    est = np.column_stack([X[:, 0].real, X[:, 0].imag, X[:, 1].real])
    d = est - truth
    return d * d


def _simulate_block(config: ExperimentConfig, snr_db: float, trial_indices) -> _Block:
    A, Y, truth = _draw_observations(config, snr_db, trial_indices)
    violations = ~(truth[:, 2] > np.hypot(truth[:, 0], truth[:, 1]))
    errors = {}
    conv = iters = stopped = None
    if "LS" in config.estimator_set:
        errors["LS"] = _squared_errors(ls_estimate_batch(A, Y), truth)
    if "DES" in config.estimator_set:
        res = des_estimate_batch(A, Y, config.dual_ascent)
        errors["DES"] = _squared_errors(res.x_hat, truth)
        conv, iters, stopped = res.converged, res.iterations, res.stopped
    return _Block(errors, conv, iters, stopped, violations)


def _block_task(args):
    config, snr_db, lo, hi = args
    return _simulate_block(config, snr_db, range(lo, hi))


def run_trial(config: ExperimentConfig, snr_db: float, trial_index: int) -> TrialOutcome:
    """Simulate a single trial; identical to that trial's row inside :func:`run_experiment`."""
    b = _simulate_block(config, snr_db, [trial_index])
    has_des = b.converged is not None
    return TrialOutcome(
        squared_errors={k: v[0].copy() for k, v in b.errors.items()},
        des_converged=bool(b.converged[0]) if has_des else None,
        des_iterations=int(b.iterations[0]) if has_des else None,
        des_stopped=bool(b.stopped[0]) if has_des else None,
        channel_violation=bool(b.violations[0]),
    )


def _concat(blocks, attr):
    parts = [getattr(b, attr) for b in blocks]
    return None if parts[0] is None else np.concatenate(parts)


def _run_blocks(config: ExperimentConfig, workers: int):
    tasks = [
        (config, snr, lo, min(lo + BLOCK_SIZE, config.trials))
        for snr in config.snr_db_list
        for lo in range(0, config.trials, BLOCK_SIZE)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_block_task, tasks))
    else:
        blocks = [_block_task(t) for t in tasks]
    per_snr = {}
    for task, block in zip(tasks, blocks):
        per_snr.setdefault(task[1], []).append(block)
    return per_snr


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> list[MseRecord]:
    """
    Run every (SNR, trial) pair and aggregate one record per (SNR, estimator, component).

    Records are ordered by SNR (as listed), then estimator (LS before DES), then
    component. ``workers`` overrides ``config.workers``; output does not depend on it.
    """
    workers = config.workers if workers is None else workers
    per_snr = _run_blocks(config, workers)
    frame = config.frame
    records = []
    for snr in config.snr_db_list:
        blocks = per_snr[snr]
        violations = int(np.count_nonzero(_concat(blocks, "violations")))
        bounds = crlb_for_frame(frame, config.noise_variance(snr)).by_component()
        nonconv = 0
        if "DES" in config.estimator_set:
            nonconv = int(np.count_nonzero(~_concat(blocks, "converged")))
            if nonconv > NONCONVERGED_WARN_FRACTION * config.trials:
                log.warning(
                    "SNR %g dB: %d of %d DES trials did not converge within t_max=%d",
                    snr, nonconv, config.trials, config.dual_ascent.t_max,
                )
        for est in ESTIMATORS:
            if est not in config.estimator_set:
                continue
            se = np.concatenate([b.errors[est] for b in blocks])
            mse = se.mean(axis=0)
            for c, comp in enumerate(COMPONENTS):
                records.append(
                    MseRecord(
                        snr_db=snr,
                        estimator=est,
                        component=comp,
                        mse=float(mse[c]),
                        crlb=bounds[comp],
                        trials=config.trials,
                        nonconverged=nonconv if est == "DES" else 0,
                        seed=config.master_seed,
                        channel_violations=violations,
                    )
                )
    return records


def _index(records):
    table = {}
    for r in records:
        table[(r.snr_db, r.estimator, r.component)] = r
    return table


def _snr_order(records):
    seen = []
    for r in records:
        if r.snr_db not in seen:
            seen.append(r.snr_db)
    return seen


@dataclass(frozen=True)
class GainRow:
    snr_db: float
    component: str
    gain_pct: float
    mse_ls: float
    mse_des: float


def gains_table(records) -> list[GainRow]:
    """Percentage MSE reduction of DES relative to LS for every (SNR, component)."""
    records = list(records)
    if not records:
        raise IncompleteDataError("no records to compare")
    table = _index(records)
    rows = []
    for snr in _snr_order(records):
        for comp in COMPONENTS:
            ls = table.get((snr, "LS", comp))
            des = table.get((snr, "DES", comp))
            if ls is None or des is None:
                raise IncompleteDataError(f"missing LS/DES pair at SNR {snr:g} dB, component {comp}")
            gain = (ls.mse - des.mse) / ls.mse * 100.0 if ls.mse != 0 else 0.0
            rows.append(GainRow(snr, comp, gain, ls.mse, des.mse))
    return rows


@dataclass(frozen=True)
class DiffRow:
    snr_db: float
    component: str
    difference: float


DIFFERENCE_PAIRS = ("LS-DES", "DES-CRLB")


def mse_difference(records, pair: str = "LS-DES") -> list[DiffRow]:
    """Signed MSE differences, either ``MSE_LS - MSE_DES`` or ``MSE_DES - CRLB``."""
    if pair not in DIFFERENCE_PAIRS:
        raise InvalidParameterError(f"pair must be one of {DIFFERENCE_PAIRS}, got {pair!r}")
    records = list(records)
    if not records:
        raise IncompleteDataError("no records to compare")
    table = _index(records)
    rows = []
    for snr in _snr_order(records):
        for comp in COMPONENTS:
            des = table.get((snr, "DES", comp))
            if des is None:
                raise IncompleteDataError(f"missing DES record at SNR {snr:g} dB, component {comp}")
            if pair == "LS-DES":
                ls = table.get((snr, "LS", comp))
                if ls is None:
                    raise IncompleteDataError(f"missing LS record at SNR {snr:g} dB, component {comp}")
                rows.append(DiffRow(snr, comp, ls.mse - des.mse))
            else:
                rows.append(DiffRow(snr, comp, des.mse - des.crlb))
    return rows


def combined_h_mse(records, estimator: str) -> dict[float, float]:
    """MSE of the complex direct-channel estimate, ``E|h_hat - h|^2``, per SNR."""
    table = _index(records)
    out = {}
    for snr in _snr_order(records):
        re = table.get((snr, estimator, "re_h"))
        im = table.get((snr, estimator, "im_h"))
        if re is None or im is None:
            raise IncompleteDataError(f"missing {estimator} h records at SNR {snr:g} dB")
        out[snr] = re.mse + im.mse
    return out


def convergence_trace(config: ExperimentConfig, snr_db: float, trial_index: int):
    """
    Full DES traces for one trial.

    Returns ``(lambda_trace, delta_trace, iterate_trace)``; the iterate trace
    has shape ``(iterations + 1, 2)`` holding complex ``(h_hat, eta_hat)``.
    """
    if "DES" not in config.estimator_set:
        raise InvalidParameterError("convergence_trace needs DES in the estimator set")
    A, Y, _ = _draw_observations(config, snr_db, [trial_index])
    res = des_estimate(A, Y[0], config.dual_ascent)
    return res.lambda_trace, res.delta_trace, res.x_trace


def settling_iteration(lambda_trace, delta_trace, tol: float) -> int:
    """First index after which every successive change of both multipliers stays below ``tol``."""
    lt = np.asarray(lambda_trace, dtype=float)
    dt = np.asarray(delta_trace, dtype=float)
    moves = np.maximum(np.abs(np.diff(lt)), np.abs(np.diff(dt))) >= tol
    hits = np.flatnonzero(moves)
    return 0 if hits.size == 0 else int(hits[-1]) + 1


@dataclass(frozen=True)
class ConvergenceStats:
    trials: int
    converged_fraction: float
    active_trials: int
    median_settling_active: float
    median_iterations_active: float


def convergence_statistics(config: ExperimentConfig, snr_db: float) -> ConvergenceStats:
    """
    DES convergence summary at one SNR over all configured trials.

    "Active" trials are those whose multipliers move at all, i.e. where the LS
    point violates a constraint; medians are taken over them.
    """
    A, Y, _ = _draw_observations(config, snr_db, range(config.trials))
    res = des_estimate_batch(A, Y, config.dual_ascent, keep_traces=True)
    settle, iters = [], []
    for i in range(len(res)):
        n = int(res.iterations[i]) + 1
        lt, dt = res.lambda_trace[i, :n], res.delta_trace[i, :n]
        if np.any(lt > 0) or np.any(dt > 0):
            settle.append(settling_iteration(lt, dt, config.dual_ascent.tol))
            iters.append(n - 1)
    return ConvergenceStats(
        trials=config.trials,
        converged_fraction=float(np.mean(res.converged)),
        active_trials=len(settle),
        median_settling_active=float(np.median(settle)) if settle else 0.0,
        median_iterations_active=float(np.median(iters)) if iters else 0.0,
    )
