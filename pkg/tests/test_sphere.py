"""Sphere-search bit metrics against brute-force oracles, and the counting contract."""

import itertools

import numpy as np
import pytest

from bicmbcp.counters import OpCounters
from bicmbcp.lattice import RealLatticeSystem, realify, zf_dfe
from bicmbcp.qam import QamConstellation
from bicmbcp.sphere import (Mode, SearchOptions, compute_precoded_metrics,
                            exhaustive_bit_metric, exhaustive_multiplications_per_metric,
                            exhaustive_precoded_metrics, frame_precoded_metrics, node_cost,
                            nonprecoded_metric, nonprecoded_metrics, sd_search)

from conftest import (brute_force_metrics, lattice_instance, precoded_instance,
                      to_complex_positions)


def _frame(P, M, K, seed, sigma=0.5):
    """One channel, K received vectors of the precoded system."""
    rng = np.random.default_rng(seed)
    G_tilde, _, _, qam = precoded_instance(P, M, rng, sigma)
    system = RealLatticeSystem.from_complex(G_tilde, qam.pam)
    x = qam.points[rng.integers(0, qam.size, (K, P))]
    noise = sigma * (rng.standard_normal((K, P)) + 1j * rng.standard_normal((K, P))) / np.sqrt(2)
    r = x @ G_tilde.T + noise
    _, r_real = realify(G_tilde, r)
    return system, r_real, system.rotate(r_real), G_tilde, r, qam


def test_mode_parsing():
    assert Mode.parse("PSI") is Mode.PSI and Mode.parse(Mode.CSD) is Mode.CSD
    assert Mode.EXH.label == "EXH"
    with pytest.raises(ValueError):
        Mode.parse("ml")


def test_mode_presets():
    assert SearchOptions.for_mode("psi") == SearchOptions(True, True, True)
    assert SearchOptions.for_mode("csd") == SearchOptions(False, False, False)
    with pytest.raises(ValueError):
        SearchOptions.for_mode("exh")


@pytest.mark.parametrize("M", [2, 4, 6])
def test_noiseless_matching_constraint_finds_transmitted_vector(M):
    rng = np.random.default_rng(M)
    system, r_breve, G_tilde, r, sent, qam = lattice_instance(2, M, rng, sigma=0.0)
    half = M // 2
    x = system.pam.index_of(np.concatenate(
        [np.stack([qam.labels[s][:half], qam.labels[s][half:]]) for s in sent]))
    b = int(system.pam.labels[x[1], 0])
    metric, argmin = sd_search(r_breve, system, (1, 0, b))
    assert metric < 1e-24
    np.testing.assert_array_equal(argmin, x)


@pytest.mark.parametrize("M", [2, 6])
def test_sd_equals_brute_force(M):
    rng = np.random.default_rng(100 + M)
    worst = 0.0
    for _ in range(200):
        system, r_breve, G_tilde, r, _, qam = lattice_instance(2, M, rng, sigma=0.6)
        oracle = brute_force_metrics(G_tilde, r, qam)
        for lhat in range(4):
            for ihat in range(M // 2):
                for b in (0, 1):
                    metric, argmin = sd_search(r_breve, system, (lhat, ihat, b))
                    assert system.pam.labels[argmin[lhat], ihat] == b
                    assert metric == pytest.approx(system.weight(r_breve, argmin), rel=1e-12)
                    l = lhat // 2
                    i = ihat + (M // 2) * (lhat % 2)
                    worst = max(worst, abs(metric - oracle[l, i, b]) / max(oracle[l, i, b], 1e-300))
    assert worst < 1e-9


@pytest.mark.parametrize("mode", ["csd", "psi"])
@pytest.mark.parametrize("P, M", [(1, 2), (1, 6), (2, 4), (3, 2)])
def test_all_modes_match_complex_oracle(mode, P, M):
    system, r_real, r_breve, G_tilde, r, qam = _frame(P, M, 40, seed=10 * P + M)
    metrics, execs = frame_precoded_metrics(r_breve, system, mode)
    exh = exhaustive_precoded_metrics(r_real, system.G, qam.pam)
    for k in range(len(r)):
        oracle = brute_force_metrics(G_tilde, r[k], qam)
        np.testing.assert_allclose(to_complex_positions(metrics[k], M), oracle, rtol=1e-9)
        np.testing.assert_allclose(to_complex_positions(exh[k], M), oracle, rtol=1e-9)


@pytest.mark.parametrize("P, M, psi, csd", [(2, 2, 5, 8), (4, 6, 25, 48), (1, 4, 5, 8)])
def test_execution_counts(P, M, psi, csd):
    system, _, r_breve, *_ = _frame(P, M, 6, seed=3)
    c = OpCounters()
    _, execs = frame_precoded_metrics(r_breve, system, "psi", c)
    assert np.all(execs == psi) and c.sd_executions == 6 * psi
    _, execs = frame_precoded_metrics(r_breve, system, "csd")
    assert np.all(execs == csd)
    assert c.restarts == 0


@pytest.mark.parametrize("P, M", [(2, 2), (2, 6), (3, 4)])
def test_joint_minimum_consistency(P, M):
    system, _, r_breve, *_ = _frame(P, M, 30, seed=P * M)
    for mode in ("csd", "psi"):
        metrics, _ = frame_precoded_metrics(r_breve, system, mode)
        pair_min = metrics.min(axis=-1)  # (K, 2P, M/2)
        gamma = pair_min.reshape(len(metrics), -1).min(axis=1)
        np.testing.assert_allclose(pair_min, np.broadcast_to(gamma[:, None, None], pair_min.shape),
                                   rtol=1e-12)
    # the joint ML point's own label bits take the joint minimum
    for k in range(5):
        gamma, xhat = sd_search(r_breve[k], system, None)
        m = compute_precoded_metrics(r_breve[k], system, "psi")
        for lhat in range(system.n):
            for ihat in range(M // 2):
                assert m[lhat, ihat, system.pam.labels[xhat[lhat], ihat]] == pytest.approx(gamma)


def test_modes_agree_with_each_other():
    system, r_real, r_breve, *_ = _frame(2, 4, 50, seed=77, sigma=1.0)
    csd, _ = frame_precoded_metrics(r_breve, system, "csd")
    psi, _ = frame_precoded_metrics(r_breve, system, "psi")
    exh = exhaustive_precoded_metrics(r_real, system.G, system.pam)
    np.testing.assert_allclose(csd, exh, rtol=1e-9)
    np.testing.assert_allclose(psi, exh, rtol=1e-9)
    np.testing.assert_allclose(compute_precoded_metrics(r_breve[0], system, "exh"), exh[0],
                               rtol=1e-9)


def test_table_and_recycling_are_transparent():
    system, _, r_breve, *_ = _frame(3, 4, 40, seed=5, sigma=0.8)
    base, _ = frame_precoded_metrics(r_breve, system, "csd")
    for opts in [SearchOptions(use_table=True), SearchOptions(recycle=True),
                 SearchOptions(ordered=False), SearchOptions(True, True, True, False)]:
        out, _ = frame_precoded_metrics(r_breve, system, "csd", options=opts)
        if opts.reduce_executions:
            np.testing.assert_allclose(out, base, rtol=1e-12)
        else:
            np.testing.assert_array_equal(out, base)


def test_recycling_saves_partial_weight_evaluations():
    system, _, r_breve, *_ = _frame(2, 6, 30, seed=9, sigma=0.7)
    plain, recycled = OpCounters(), OpCounters()
    a, _ = frame_precoded_metrics(r_breve, system, "csd", plain, SearchOptions(use_table=True))
    b, _ = frame_precoded_metrics(r_breve, system, "csd", recycled,
                                  SearchOptions(use_table=True, recycle=True))
    np.testing.assert_array_equal(a, b)
    assert recycled.partial_weight_evaluations < plain.partial_weight_evaluations
    assert recycled.cache_hits > 0 and plain.cache_hits == 0
    assert recycled.nodes_visited == plain.nodes_visited


def test_single_complex_symbol_reuses_lower_layer():
    # P = 1: the in-phase partial weights do not depend on the quadrature branch
    system, *_ = lattice_instance(1, 2, np.random.default_rng(1))
    # r[1] = 0 ties both quadrature branches, so the second one is expanded as well
    r_breve = np.array([0.3, 0.0])
    c = OpCounters()
    sd_search(r_breve, system, None, radius_sq=np.inf, recycle=True, counters=c)
    assert c.partial_weight_evaluations == 2 * system.pam.size
    assert c.cache_hits == system.pam.size
    assert c.nodes_visited == 3 * system.pam.size


def test_node_cost_formula():
    n = 4
    assert node_cost(n - 1, n, False) == 2
    assert [node_cost(u, n, False) for u in range(n)] == [5, 4, 3, 2]
    assert all(node_cost(u, n, True) == 1 for u in range(n))


def test_counted_node_costs_on_smallest_tree():
    system, r_breve, *_ = lattice_instance(1, 2, np.random.default_rng(4))
    c = OpCounters()
    sd_search(r_breve, system, (1, 0, 0), radius_sq=np.inf, counters=c)
    # one allowed child at the top layer (2 mults), then both bottom children (3 each)
    assert c.partial_weight_evaluations == 3
    assert c.real_multiplications == 2 + 2 * 3
    c = OpCounters()
    sd_search(r_breve, system, (1, 0, 0), radius_sq=np.inf, counters=c, use_table=True)
    assert c.real_multiplications == 3


def test_table_mode_costs_one_multiplication_per_node():
    system, _, r_breve, *_ = _frame(2, 4, 10, seed=2)
    for k in range(10):
        c = OpCounters()
        radius = zf_dfe(r_breve[k], system, (2, 1, 0)).radius_sq
        sd_search(r_breve[k], system, (2, 1, 0), radius_sq=radius, counters=c, use_table=True)
        assert c.real_multiplications == c.partial_weight_evaluations


def test_csd_multiplications_include_zf_dfe():
    system, _, r_breve, *_ = _frame(2, 2, 1, seed=6)
    c = OpCounters()
    sd_search(r_breve[0], system, (0, 0, 1), counters=c)
    assert 0 < c.zf_dfe_multiplications < c.real_multiplications


def test_radius_never_grows_within_a_search():
    system, _, r_breve, *_ = _frame(3, 6, 20, seed=8, sigma=1.5)
    for k in range(20):
        trace = np.empty(4096)
        c = OpCounters()
        sd_search(r_breve[k], system, (0, 1, 1), counters=c, radius_trace=trace)
        assert c.restarts == 0


def test_radius_trace_is_non_increasing():
    system, _, r_breve, *_ = _frame(3, 6, 20, seed=8, sigma=1.5)
    for k in range(20):
        trace = np.full(4096, np.nan)
        sd_search(r_breve[k], system, (0, 1, 1), radius_trace=trace)
        seen = trace[~np.isnan(trace)]
        assert len(seen) >= 2
        assert np.all(np.diff(seen) <= 0)


def test_restart_path_recovers_from_too_small_radius():
    system, r_breve, *_ = lattice_instance(2, 4, np.random.default_rng(3), sigma=1.0)
    exact, _ = sd_search(r_breve, system, (1, 0, 1))
    c = OpCounters()
    metric, _ = sd_search(r_breve, system, (1, 0, 1), radius_sq=exact * 1e-3, counters=c)
    assert c.restarts > 0
    assert metric == pytest.approx(exact, rel=1e-12)


def test_pruned_points_are_never_better():
    rng = np.random.default_rng(12)
    for _ in range(20):
        system, r_breve, *_ = lattice_instance(2, 4, rng, sigma=1.0)
        pam = system.pam
        pts = np.array(list(itertools.product(range(pam.size), repeat=4)))
        w = np.sum((r_breve[None] - pam.points[pts] @ system.R.T) ** 2, axis=1)
        for constraint in [(0, 0, 1), (3, 1, 0)]:
            lhat, ihat, b = constraint
            metric, _ = sd_search(r_breve, system, constraint)
            feasible = pam.labels[pts[:, lhat], ihat] == b
            assert w[feasible].min() >= metric - 1e-12 * metric


def test_constraint_out_of_range():
    system, r_breve, *_ = lattice_instance(1, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sd_search(r_breve, system, (2, 0, 0))


# ---- exhaustive search ------------------------------------------------------

def test_exhaustive_count_closed_form():
    assert exhaustive_multiplications_per_metric(2, 2) == 160
    assert exhaustive_multiplications_per_metric(2, 6) == 2048 * 20
    assert exhaustive_multiplications_per_metric(4, 6) == 2 ** 23 * 72


@pytest.mark.parametrize("P, M", [(2, 2), (1, 6), (2, 4)])
def test_instrumented_exhaustive_matches_closed_form(P, M):
    system, r_real, *_ = _frame(P, M, 1, seed=1)
    c = OpCounters()
    exhaustive_bit_metric(r_real[0], system.G, system.pam, (0, 0, 0), c)
    assert c.real_multiplications == exhaustive_multiplications_per_metric(P, M)
    c = OpCounters()
    exhaustive_precoded_metrics(r_real, system.G, system.pam, c)
    assert c.real_multiplications == exhaustive_multiplications_per_metric(P, M) * 2 * M * P


def test_literal_exhaustive_metric_agrees_with_enumerator():
    system, r_real, *_ = _frame(2, 4, 5, seed=4, sigma=1.0)
    marg = exhaustive_precoded_metrics(r_real, system.G, system.pam)
    for k in range(5):
        for lhat, ihat, b in [(0, 0, 0), (1, 1, 1), (3, 0, 1)]:
            value, argmin = exhaustive_bit_metric(r_real[k], system.G, system.pam,
                                                  (lhat, ihat, b), chunk=100)
            assert value == pytest.approx(marg[k, lhat, ihat, b], rel=1e-12)
            assert system.pam.labels[argmin[lhat], ihat] == b


# ---- non-precoded subchannels -----------------------------------------------

def test_nonprecoded_zero_for_matching_hypothesis():
    qam = QamConstellation(4)
    lam = 0.7
    for n, x in enumerate(qam.points):
        for i in range(4):
            b = int(qam.labels[n, i])
            assert nonprecoded_metric(lam * x, lam, i, b, qam) == pytest.approx(0.0, abs=1e-15)


def test_nonprecoded_symmetry_at_origin():
    qam = QamConstellation(2)
    for i in range(2):
        assert nonprecoded_metric(0j, 1.0, i, 0, qam) == nonprecoded_metric(0j, 1.0, i, 1, qam)


def test_nonprecoded_matches_half_set_scan():
    qam = QamConstellation(4)
    rng = np.random.default_rng(21)
    r = rng.standard_normal(1000) * 1.5 + 1j * rng.standard_normal(1000) * 1.5
    lam = rng.uniform(0.05, 3.0, 1000)
    fast = nonprecoded_metrics(r[:, None], lam[:, None], qam)[:, 0]
    for i in range(4):
        for b in (0, 1):
            half = qam.subset(i, b)
            assert len(half) == 8
            brute = np.min(np.abs(r[:, None] - lam[:, None] * half[None]) ** 2, axis=1)
            np.testing.assert_allclose(fast[:, i, b], brute, rtol=1e-12, atol=1e-15)


def test_nonprecoded_batch_shape():
    qam = QamConstellation(6)
    out = nonprecoded_metrics(np.zeros((7, 3), dtype=complex), np.ones(3), qam)
    assert out.shape == (7, 3, 6, 2)
