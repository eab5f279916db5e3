"""Property-based checks over random seeds and sizes."""

from pathlib import Path

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from bicmbcp.config import load_config
from bicmbcp.counters import OpCounters
from bicmbcp.lattice import RealLatticeSystem, realify
from bicmbcp.sphere import exhaustive_precoded_metrics, frame_precoded_metrics

from conftest import brute_force_metrics, precoded_instance, to_complex_positions

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), P=st.sampled_from([1, 2, 3]),
       M=st.sampled_from([2, 4]), sigma=st.floats(0.0, 3.0))
def test_every_engine_matches_brute_force(seed, P, M, sigma):
    rng = np.random.default_rng(seed)
    G_tilde, r, _, qam = precoded_instance(P, M, rng, sigma)
    system = RealLatticeSystem.from_complex(G_tilde, qam.pam)
    _, r_real = realify(G_tilde, r)
    oracle = brute_force_metrics(G_tilde, r, qam)
    scale = max(oracle.max(), 1.0)
    exh = exhaustive_precoded_metrics(r_real[None], system.G, qam.pam)[0]
    np.testing.assert_allclose(to_complex_positions(exh, M), oracle, rtol=1e-9, atol=1e-12 * scale)
    for mode in ("csd", "psi"):
        c = OpCounters()
        got, _ = frame_precoded_metrics(system.rotate(r_real)[None], system, mode, c)
        np.testing.assert_allclose(to_complex_positions(got[0], M), oracle, rtol=1e-9,
                                   atol=1e-12 * scale)
        assert c.restarts == 0


@given(st.lists(st.integers(0, 10 ** 6), min_size=7, max_size=7),
       st.lists(st.integers(0, 10 ** 6), min_size=7, max_size=7))
def test_counters_merge_by_addition(a, b):
    ca, cb = OpCounters(a), OpCounters(b)
    total = ca + cb
    assert total.real_multiplications == a[0] + b[0]
    assert total.as_dict()["restarts"] == a[5] + b[5]
    ca += cb
    assert ca == total and (cb + OpCounters(a)) == total


def test_shipped_configs_load():
    files = sorted(CONFIG_DIR.glob("*.cfg"))
    assert files
    for path in files:
        cfg = load_config(path)
        assert cfg.P <= cfg.S <= min(cfg.n_t, cfg.n_r)
