import numpy as np
import pytest

import polarlab as pl
from polarlab.sctrellis import (
    HAVE_COMPILED,
    active_backend,
    genie_posterior_batch,
    state_conditioned_start,
)

BACKENDS = ["numpy"] + (["compiled"] if HAVE_COMPILED else [])


def test_backend_available():
    assert active_backend() in ("compiled", "numpy")


@pytest.mark.parametrize("backend", BACKENDS)
def test_matches_exact_oracle(kernels, backend):
    # the sweep reproduces the brute-force conditionals on every preset
    for name, k in kernels.items():
        for N in (2, 4, 8):
            _, X, Y = pl.sample_paths(k, N, 25, seed=N)
            for b in range(X.shape[0]):
                want = pl.posterior_path(k, N, X[b], y=Y[b])
                got = pl.sc_posteriors(k, X[b], y=Y[b], backend=backend)
                assert np.max(np.abs(want - got)) <= 1e-9, (name, N, b)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled backend unavailable")
def test_backends_agree_bitwise(kernels):
    for k in kernels.values():
        _, X, Y = pl.sample_paths(k, 16, 8, seed=1)
        for b in range(8):
            pn = pl.sc_posteriors(k, X[b], y=Y[b], backend="numpy")
            pc = pl.sc_posteriors(k, X[b], y=Y[b], backend="compiled")
            assert np.allclose(pn, pc, atol=1e-12)
        mask = np.zeros(16, dtype=bool)
        mask[:4] = True
        un, xn, qn = pl.sc_decode(k, Y, mask, X * mask, backend="numpy")
        uc, xc, qc = pl.sc_decode(k, Y, mask, X * mask, backend="compiled")
        assert np.array_equal(un, uc) and np.array_equal(xn, xc)
        assert np.allclose(qn, qc, atol=1e-12)


def test_genie_profile_uninformative_exact():
    prof = pl.genie_profile_mc(pl.get_preset("iid:0.5"), 8, 64, seed=0)
    assert np.all(prof.H == 1.0) and np.all(prof.Z == 1.0)
    assert np.all(prof.H_stderr == 0.0) and np.all(prof.Z_stderr == 0.0)
    assert prof.method == "mc"


@pytest.mark.parametrize("backend", BACKENDS)
def test_genie_profile_calibration(bb00, backend):
    exact = pl.exact_profile(bb00, 8)
    prof = pl.genie_profile_mc(bb00, 8, 2000, seed=3, backend=backend)
    tol_h = 4 * prof.H_stderr + 1e-12
    tol_z = 4 * prof.Z_stderr + 1e-12
    assert np.all(np.abs(prof.H - exact.H) <= tol_h)
    assert np.all(np.abs(prof.Z - exact.Z) <= tol_z)


def test_genie_profile_seed_and_chunking(hmm2):
    a = pl.genie_profile_mc(hmm2, 16, 40, seed=5)
    b = pl.genie_profile_mc(hmm2, 16, 40, seed=5, chunk_bytes=1 << 12)
    c = pl.genie_profile_mc(hmm2, 16, 40, seed=6)
    assert np.array_equal(a.H, b.H) and np.array_equal(a.Z, b.Z)
    assert not np.array_equal(a.H, c.H)


def test_genie_posterior_batch_matches_single(hmm2):
    _, X, Y = pl.sample_paths(hmm2, 8, 6, seed=2)
    U = pl.polar_encode(X)
    P = genie_posterior_batch(hmm2, Y, U)
    assert P.shape == (6, 8)
    for b in range(6):
        single = pl.sc_posteriors(hmm2, X[b], y=Y[b])
        assert np.allclose(P[b], single, atol=1e-12)
    with pytest.raises(ValueError):
        genie_posterior_batch(hmm2, Y, U[:, :4])


def test_sc_decode_genie_roundtrip(kernels):
    for k in kernels.values():
        _, X, Y = pl.sample_paths(k, 16, 5, seed=7)
        U = pl.polar_encode(X)
        mask = np.ones(16, dtype=bool)
        uhat, xhat, p0 = pl.sc_decode(k, Y, mask, U)
        assert np.array_equal(uhat, U)
        assert np.array_equal(xhat, X)
        assert p0.shape == (5, 16)


def test_sc_decode_tie_breaks_to_zero():
    # an uninformative channel leaves every posterior at exactly 1/2; the
    # decoder must resolve those ties deterministically to 0
    k = pl.get_preset("iid:0.5")
    _, _, Y = pl.sample_paths(k, 8, 3, seed=1)
    mask = np.zeros(8, dtype=bool)
    uhat, xhat, p0 = pl.sc_decode(k, Y, mask, np.zeros(8, dtype=np.int8))
    assert not uhat.any()
    assert not xhat.any()
    assert np.allclose(p0, 0.5, atol=1e-12)


def test_sc_decode_single_block_shape(bb00):
    _, X, Y = pl.sample_paths(bb00, 8, 1, seed=0)
    mask = np.ones(8, dtype=bool)
    U = pl.polar_encode(X[0])
    uhat, xhat, p0 = pl.sc_decode(bb00, Y[0], mask, U)
    assert uhat.shape == (8,) and xhat.shape == (8,) and p0.shape == (8,)
    assert np.array_equal(xhat, X[0])


def test_engine_matches_batch_decode(hmm2):
    _, X, Y = pl.sample_paths(hmm2, 8, 1, seed=11)
    mask = np.zeros(8, dtype=bool)
    uhat, xhat, p0 = pl.sc_decode(hmm2, Y[0], mask, np.zeros(8, dtype=np.int8))
    eng = pl.SCEngine(hmm2, Y[0])
    bits = [eng.decide() for _ in range(8)]
    assert np.array_equal(bits, uhat)
    assert np.allclose(eng.posteriors(), p0, atol=1e-12)
    assert np.array_equal(eng.source_block(), xhat)


def test_engine_rewind_and_forcing(hmm2):
    _, _, Y = pl.sample_paths(hmm2, 8, 1, seed=13)
    eng = pl.SCEngine(hmm2, Y[0])
    free = [eng.decide() for _ in range(8)]
    eng.rewind(3)
    assert eng.decisions == free[:3]
    # forcing a different bit re-routes the remaining path consistently
    forced = eng.decide(1 - free[3])
    assert forced == 1 - free[3]
    rest = [eng.decide() for _ in range(4)]
    assert eng.position == 8
    eng.rewind(0)
    replay = [eng.decide() for _ in range(8)]
    assert replay == free


def test_engine_posterior_before_decide(bb00):
    eng = pl.SCEngine(bb00, np.zeros(8, dtype=np.int64))
    p0, p1 = eng.posterior()
    assert p0 + p1 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(IndexError):
        eng.rewind(5)


def test_state_conditioned_start_values(bb00):
    w = state_conditioned_start(bb00, 1)
    assert np.allclose(w, [1.0, 0.0, 0.0, 0.0])
    w2 = state_conditioned_start(bb00, "2")
    assert np.allclose(w2, [0.0, 1.0, 0.0, 0.0])


def test_state_conditioning_rejected_for_diffuse_chain(hmm2):
    # conditioning on S1 is only sound when the pre-landing state is forced
    with pytest.raises(ValueError):
        state_conditioned_start(hmm2, 0)
    with pytest.raises(ValueError):
        pl.genie_profile_mc(hmm2, 8, 10, seed=0, given_state=0)


def test_given_state_collapses_window(bb00):
    prof = pl.genie_profile_mc(bb00, 8, 400, seed=9, given_state=1)
    assert np.allclose(prof.H[5:6], 0.0, atol=1e-9)
    prof2 = pl.genie_profile_mc(bb00, 8, 400, seed=9, given_state=0)
    assert np.allclose(prof2.H[5:6], 1.0, atol=1e-9)


def test_initial_overrides_start(bb00):
    # pinning the pre-block state to 3 makes S1 = 0: the window is one fair bit
    prof = pl.genie_profile_mc(bb00, 8, 300, seed=4, initial=[0, 0, 0, 1.0])
    assert np.allclose(prof.H[5:6], 1.0, atol=1e-9)


def test_memoryless_matches_two_coin_formula(rng):
    # for a memoryless uniform-input channel the N=2 minus index behaves as a
    # XOR of two independent crossovers
    k = pl.get_preset("iid:0.11")
    prof = pl.exact_profile(k, 2)
    conv = pl.binary_convolve(0.11, 0.11)
    assert np.isclose(prof.H[0], pl.h2(conv), atol=1e-12)
    got = pl.genie_profile_mc(k, 2, 4000, seed=8)
    assert np.abs(got.H[0] - prof.H[0]) <= 4 * got.H_stderr[0] + 1e-12
