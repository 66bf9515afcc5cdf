"""
End-to-end acceptance checks at the stated tolerances and time budgets.

Each test reports one PASS/FAIL line (collected in the terminal summary) and
then asserts, so a failing criterion shows up both ways.
"""

import io
import time

import numpy as np
import pytest

from lisce.channel import ChannelParams, sample_channel
from lisce.cli import cmd_simulate
from lisce.crlb import crlb_closed_form, crlb_numeric, fim, fim_gaussian_linear, mean_jacobian
from lisce.estimators import DualAscentConfig, constraint_violation, des_estimate_batch, ls_estimate_batch
from lisce.harness import (
    ExperimentConfig,
    convergence_statistics,
    gains_table,
    mse_difference,
    run_experiment,
)
from lisce.numerics import RandomStream
from lisce.results import csv_body
from lisce.signal import PilotFrame, build_design_matrix, default_pilots

from oracles import grid_constrained_ls

REFERENCE_CONFIG_TEXT = """
sigma_h2 = 1/64
sigma_f2 = 1/25
sigma_g2 = 1/9
n_elements = 32
k1 = 1
k2 = 1
snr_db = 0, 2, 4, 6, 8
trials = 10000
seed = 1
"""

# target gains (%) at 0 dB for Re(h), Im(h), eta
REFERENCE_GAINS_0DB = (16.53, 18.12, 8.24)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


@pytest.fixture(scope="module")
def reference_records():
    with Timer() as t:
        records = run_experiment(ExperimentConfig(trials=10_000, master_seed=1))
    return records, t.seconds


def test_c1_crlb_oracle_equivalence(report):
    rng = np.random.default_rng(101)
    triples = 10 ** rng.uniform(-3, 3, size=(1000, 3))
    with Timer() as t:
        worst = 0.0
        for a, b, s in triples:
            num = np.array(crlb_numeric(a, b, s).as_tuple())
            ref = np.array(crlb_closed_form(a, b, s).as_tuple())
            worst = max(worst, float(np.max(np.abs(num - ref) / ref)))
    ok = worst < 1e-10 and t.seconds < 1.0
    report("C1 CRLB numeric vs closed form", ok, f"max rel err {worst:.2e} (< 1e-10), {t.seconds:.2f}s (< 1s)")
    assert ok


def test_c2_fim_consistency(report):
    rng = np.random.default_rng(202)
    with Timer() as t:
        worst = 0.0
        for _ in range(100):
            k1, k2 = rng.integers(1, 6, size=2)
            s1 = rng.normal(size=k1) + 1j * rng.normal(size=k1)
            s2 = rng.normal(size=k2) + 1j * rng.normal(size=k2)
            sigma_w2 = float(10 ** rng.uniform(-1, 1))
            frame = PilotFrame(s1, s2)
            F = fim_gaussian_linear(mean_jacobian(frame), sigma_w2)
            ref = fim(frame.energy1, frame.energy2, sigma_w2)
            worst = max(worst, float(np.max(np.abs(F - ref)) / max(1.0, np.max(np.abs(ref)))))
    ok = worst <= 1e-12 and t.seconds < 1.0
    report("C2 Gaussian FIM vs energy-form FIM", ok, f"max err {worst:.2e} (<= 1e-12), {t.seconds:.2f}s (< 1s)")
    assert ok


def test_c3_ls_analytic_covariance(report):
    snr = 4.0
    cfg = ExperimentConfig(trials=10_000, snr_db_list=(snr,), estimator_set=("LS",), master_seed=1)
    with Timer() as t:
        recs = run_experiment(cfg)
    A = build_design_matrix(default_pilots(1, 1))
    K = cfg.noise_variance(snr) * np.linalg.inv(A.conj().T @ A)
    # circular noise: real and imaginary parts of each estimate carry half the variance
    expected = {"re_h": K[0, 0].real / 2, "im_h": K[0, 0].real / 2, "eta": K[1, 1].real / 2}
    rel = {r.component: abs(r.mse / expected[r.component] - 1) for r in recs}
    ok = max(rel.values()) <= 0.05 and t.seconds < 5.0
    detail = ", ".join(f"{c} {100 * v:.2f}%" for c, v in rel.items())
    report("C3 LS MSE vs analytic covariance", ok, f"rel dev {detail} (<= 5%), {t.seconds:.2f}s (< 5s)")
    assert ok


def _real_instances(n, seed):
    """Real-valued observations drawn from the reference model at 0 dB."""
    params = ChannelParams()
    Y = np.empty((n, 2))
    for i in range(n):
        rng = RandomStream(seed, i)
        ch = sample_channel(params, rng)
        w = rng.standard_normal(2) * np.sqrt(0.5)
        Y[i] = (ch.h.real + w[0], ch.h.real + ch.eta + w[1])
    return Y


def test_c4_constrained_minimizer_oracle(report):
    A = np.array([[1, 0], [1, 1]], dtype=complex)
    with Timer() as t:
        Y = _real_instances(100, seed=2024)
        res = des_estimate_batch(A, Y, DualAscentConfig())
        grid = np.array([grid_constrained_ls(A.real, y) for y in Y])
    conv = res.converged
    active = np.array([max(constraint_violation(x)) > 0 for x in ls_estimate_batch(A, Y)])
    err = np.max(np.abs(res.x_hat - grid), axis=1)
    worst = float(err[conv].max())
    # the comparison is over converged runs; require most runs to be in it
    ok = worst <= 1e-2 and conv.sum() >= 80 and t.seconds < 30.0
    report(
        "C4 converged DES vs grid-search minimizer",
        ok,
        f"max err {worst:.2e} (<= 1e-2) over {conv.sum()}/100 converged "
        f"({(conv & active).sum()} with an active constraint), {t.seconds:.2f}s (< 30s)",
    )
    assert ok


def test_c5_gain_table(reference_records, report):
    records, seconds = reference_records
    rows = gains_table(records)
    g = {(r.snr_db, r.component): r.gain_pct for r in rows}
    comps = ("re_h", "im_h", "eta")
    snrs = (0.0, 2.0, 4.0, 6.0, 8.0)
    at0 = tuple(g[(0.0, c)] for c in comps)
    within = [abs(v - ref) <= 5.0 for v, ref in zip(at0, REFERENCE_GAINS_0DB)]
    decreasing = all(all(g[(a, c)] > g[(b, c)] for a, b in zip(snrs, snrs[1:])) for c in comps)
    at8 = tuple(g[(8.0, c)] for c in comps)
    small_at8 = all(0 < v <= 5 for v in at8)
    ok = all(within) and decreasing and small_at8 and seconds < 60.0
    report(
        "C5 DES-over-LS gains",
        ok,
        "0 dB gains (" + ", ".join(f"{v:.2f}" for v in at0) + ") vs ("
        + ", ".join(f"{v:.2f}" for v in REFERENCE_GAINS_0DB) + ") +/-5pp: "
        + "/".join("ok" if w else "out" for w in within)
        + f"; decreasing {decreasing}; 8 dB (" + ", ".join(f"{v:.2f}" for v in at8) + f") in (0,5]: {small_at8}"
        + f"; {seconds:.1f}s (< 60s)",
    )
    assert ok


def test_c6_mse_trends(reference_records, report):
    records, seconds = reference_records
    series = {}
    for r in records:
        series.setdefault((r.estimator, r.component), []).append(r.mse)
    decreasing = {k: all(a > b for a, b in zip(v, v[1:])) for k, v in series.items()}
    diffs = mse_difference(records, "LS-DES")
    min_gap = min(d.difference for d in diffs)
    ok = all(decreasing.values()) and min_gap > 0 and seconds < 60.0
    report(
        "C6 MSE decreasing in SNR and LS above DES",
        ok,
        f"all series strictly decreasing: {all(decreasing.values())}; min LS-DES {min_gap:.3e} (> 0)",
    )
    assert ok


def test_c7_convergence(report):
    cfg = ExperimentConfig(trials=10_000, master_seed=1)
    with Timer() as t:
        stats = convergence_statistics(cfg, 0.0)
    ok = stats.converged_fraction >= 0.90 and stats.median_settling_active <= 25 and t.seconds < 10.0
    report(
        "C7 DES convergence at 0 dB",
        ok,
        f"converged {100 * stats.converged_fraction:.2f}% (>= 90%), median settling "
        f"{stats.median_settling_active:g} over {stats.active_trials} active trials (<= 25), {t.seconds:.2f}s (< 10s)",
    )
    assert ok


def test_c8_determinism(tmp_path, report):
    cfg_path = tmp_path / "reference.cfg"
    cfg_path.write_text(REFERENCE_CONFIG_TEXT)
    outs = [tmp_path / f"run{i}.csv" for i in range(3)]
    with Timer() as t:
        cmd_simulate(cfg_path, outs[0], workers=1)
        cmd_simulate(cfg_path, outs[1], workers=1)
        cmd_simulate(cfg_path, outs[2], workers=4)
    bodies = [csv_body(p.read_text()) for p in outs]
    repeat_ok = bodies[0] == bodies[1]
    workers_ok = bodies[0] == bodies[2]
    ok = repeat_ok and workers_ok and t.seconds < 60.0
    report(
        "C8 byte-identical CSV bodies",
        ok,
        f"repeat run identical {repeat_ok}; 1 vs 4 workers identical {workers_ok}; {t.seconds:.1f}s (< 60s)",
    )
    assert ok


def test_c9_des_minus_crlb_reported(reference_records, report):
    records, _ = reference_records
    diffs = mse_difference(records, "DES-CRLB")
    negative = [(d.snr_db, d.component) for d in diffs if d.difference <= 0]
    text = io.StringIO()
    for d in diffs:
        text.write(f"{d.snr_db:g}/{d.component}={d.difference:+.3e} ")
    print(text.getvalue())
    # observation only: the estimator is biased, so the unbiased bound need not hold
    report(
        "C9 DES-CRLB differences reported",
        len(diffs) == 15,
        f"{len(diffs)} differences computed; positive at {15 - len(negative)}/15 points"
        + (f" (below the bound at {len(negative)}: biased-estimator observation)" if negative else ""),
    )
    assert len(diffs) == 15 and all(np.isfinite(d.difference) for d in diffs)
