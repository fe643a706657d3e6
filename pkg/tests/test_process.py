import numpy as np
import pytest

import polarlab as pl
from polarlab.process import EdgeKernel


def test_edge_prob_is_read_only(bb00):
    with pytest.raises(ValueError):
        bb00.edge_prob[0, 0, 0, 0] = 1.0


def test_rejects_bad_row_sums():
    bad = np.ones((2, 2, 2, 1)) / 7.0
    with pytest.raises(ValueError):
        EdgeKernel("bad", ("a", "b"), ("y",), bad)


def test_rejects_negative_entries():
    e = np.zeros((1, 1, 2, 1))
    e[0, 0, 0, 0] = 1.5
    e[0, 0, 1, 0] = -0.5
    with pytest.raises(ValueError):
        EdgeKernel("neg", ("s",), ("y",), e)


def test_periodic_needs_opt_in():
    per = np.zeros((2, 2, 2, 1))
    per[0, 1, 0, 0] = 1.0
    per[1, 0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        EdgeKernel("per", ("a", "b"), ("y",), per)
    k = EdgeKernel("per", ("a", "b"), ("y",), per, periodic_ok=True)
    assert k.period() == 2


def test_shapes_and_labels(kernels):
    for k in kernels.values():
        assert k.edge_prob.shape == (k.m, k.m, 2, k.q)
        assert len(k.states) == k.m and len(k.obs) == k.q
        assert all(isinstance(s, str) for s in k.states)


def test_stationary_distribution(kernels):
    for k in kernels.values():
        pi = pl.stationary_distribution(k).pi
        T = k.state_marginal()
        assert np.allclose(pi @ T, pi, atol=1e-12)
        assert np.isclose(pi.sum(), 1.0)
    assert np.allclose(
        pl.stationary_distribution(kernels["hmm2"]).pi, [2 / 3, 1 / 3]
    )
    assert np.allclose(
        pl.stationary_distribution(kernels["bb00"]).pi, [0.25] * 4
    )


def test_periods(kernels):
    assert kernels["bb00"].period() == 4
    assert kernels["hmm2"].period() == 1
    assert kernels["iid:0.5"].period() == 1
    assert kernels["ge"].period() == 1


def test_psi_bounds(kernels):
    bb, hm = kernels["bb00"], kernels["hmm2"]
    for lag in (0, 1, 7, 200):
        assert np.isclose(pl.psi_k_bound(bb, lag), 4.0)
    assert np.isclose(pl.psi_k_bound(hm, 0), 3.0)
    assert np.isclose(pl.psi_k_bound(hm, 1), 2.4)
    assert pl.psi_k_bound(hm, 200) <= 1.001
    for lag in (0, 3, 50):
        assert np.isclose(pl.psi_k_bound(kernels["iid:0.5"], lag), 1.0)


def test_psi_sequence_monotone(kernels):
    for name in ("hmm2", "ge"):
        d = pl.mixing_diagnostics(kernels[name], max_lag=60)
        assert np.array_equal(d.k_values, np.arange(61))
        assert np.all(np.diff(d.psi_bound) <= 1e-12)
        assert d.psi_bound[-1] >= 1.0 - 1e-12


def test_sample_paths_shapes_and_determinism(kernels):
    for k in kernels.values():
        S, X, Y = pl.sample_paths(k, 16, 7, seed=3)
        assert S.shape == (7, 17) and X.shape == (7, 16) and Y.shape == (7, 16)
        assert S.min() >= 0 and S.max() < k.m
        assert set(np.unique(X)) <= {0, 1}
        assert Y.min() >= 0 and Y.max() < k.q
        S2, X2, Y2 = pl.sample_paths(k, 16, 7, seed=3)
        assert np.array_equal(S, S2) and np.array_equal(X, X2)
        assert np.array_equal(Y, Y2)


def test_sample_paths_batch_invariant(bb00):
    # counter-based streams: path j is the same regardless of batch size
    _, X5, _ = pl.sample_paths(bb00, 12, 5, seed=11)
    _, X9, _ = pl.sample_paths(bb00, 12, 9, seed=11)
    assert np.array_equal(X5, X9[:5])


def test_sample_paths_initial_override(bb00):
    S, _, _ = pl.sample_paths(bb00, 4, 6, seed=2, initial=[0, 0, 1.0, 0])
    assert set(S[:, 0].tolist()) == {2}


def test_bb00_emission_structure(bb00):
    S, X, _ = pl.sample_paths(bb00, 64, 50, seed=5)
    # the state walk is the deterministic cycle s -> s+1 mod 4
    assert np.array_equal(S[:, 1:], (S[:, :-1] + 1) % 4)
    # slots landing in states {2, 3} always emit zero
    quiet = (S[:, 1:] == 2) | (S[:, 1:] == 3)
    assert not X[quiet].any()
    # slots landing in {0, 1} are fair coin flips
    live = ~quiet
    assert abs(X[live].mean() - 0.5) < 0.05


def test_entropy_rate_estimates(kernels):
    bb = pl.entropy_rate_estimate(kernels["bb00"], 256, 128, 0)
    # half a bit per slot plus the two phase bits amortized over the block
    assert np.isclose(bb.value, 0.5 + 2 / 256, atol=4 * bb.stderr + 1e-9)
    hm = pl.entropy_rate_estimate(kernels["hmm2"], 256, 128, 0)
    assert 0.80 < hm.value < 0.95
    iid = pl.entropy_rate_estimate(kernels["iid:0.5"], 64, 16, 0)
    assert iid.value == 1.0 and iid.stderr == 0.0


def test_save_load_roundtrip(tmp_path, kernels):
    for k in kernels.values():
        path = tmp_path / f"{k.name.replace(':', '_')}.json"
        pl.save_process(k, path)
        k2 = pl.load_process(path)
        assert k2.name == k.name
        assert k2.states == k.states and k2.obs == k.obs
        assert np.array_equal(k2.edge_prob, k.edge_prob)
        assert k2.fingerprint() == k.fingerprint()


def test_fingerprint_distinguishes(kernels):
    prints = {k.fingerprint() for k in kernels.values()}
    assert len(prints) == len(kernels)
    assert pl.get_preset("bb00").fingerprint() == pl.make_periodic_bb00().fingerprint()


def test_iid_preset_parsing():
    # iid:<p> is a uniform input observed through a crossover-p channel
    k = pl.get_preset("iid:0.25")
    assert k.m == 1
    joint = k.edge_prob[0, 0]
    assert np.isclose(joint[1].sum(), 0.5)
    assert np.isclose(joint[0, 1] + joint[1, 0], 0.25)
    with pytest.raises(ValueError):
        pl.get_preset("iid:1.5")
    with pytest.raises(ValueError):
        pl.get_preset("nosuchprocess")


def test_gilbert_elliott_construction():
    k = pl.make_gilbert_elliott()
    assert k.m == 2 and k.q == 2
    # uniform input: marginal input bias is 1/2 in every state
    assert np.allclose(k.edge_prob[:, :, 1, :].sum(axis=(1, 2)), 0.5)


def test_compose_channel_with_input_matches_iid():
    # a BSC(0.1) driven by Ber(0.5) input, single channel state
    W = np.zeros((1, 2, 1, 2))
    W[0, 0, 0, 0] = 0.9
    W[0, 0, 0, 1] = 0.1
    W[0, 1, 0, 1] = 0.9
    W[0, 1, 0, 0] = 0.1
    k = pl.compose_channel_with_input(W, 0.5, name="bsc")
    assert k.m == 1 and k.q == 2
    joint = k.edge_prob[0, 0]
    assert np.allclose(joint, [[0.45, 0.05], [0.05, 0.45]])


def test_resolve_process(tmp_path):
    assert pl.resolve_process("bb00").name == "bb00"
    path = tmp_path / "saved.json"
    pl.save_process(pl.get_preset("hmm2"), path)
    assert pl.resolve_process(str(path)).fingerprint() == pl.get_preset("hmm2").fingerprint()
    with pytest.raises(ValueError):
        pl.resolve_process("no/such/file.json")
