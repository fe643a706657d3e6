import numpy as np
import pytest

import polarlab as pl

TOL = 1e-9


def test_build_pair_tables_reused(bb00):
    tables = pl.build_pair_tables(bb00, 4)
    direct = pl.supermartingale_check(bb00, 4)
    cached = pl.supermartingale_check(bb00, 4, tables=tables)
    assert np.allclose(direct["slack"], cached["slack"], atol=1e-15)


def test_supermartingale(kernels):
    for name, k in kernels.items():
        for N in (2, 4):
            res = pl.supermartingale_check(k, N)
            assert np.all(res["slack"] >= -TOL), (name, N, res["slack"])
            assert np.all(np.abs(res["child_sum_residual"]) <= TOL), (name, N)


def test_cross_block_budget(kernels):
    for name, k in kernels.items():
        for N in (2, 4):
            res = pl.cross_block_mi_check(k, N)
            assert res["sum_u"] <= res["log2_psi0"] + TOL, (name, N)
            assert res["sum_v"] <= res["log2_psi0"] + TOL, (name, N)
            for key in ("term_u", "term_v", "mi_u_r", "mi_u_v", "mi_v_q"):
                assert np.all(res[key] >= -TOL), (name, N, key)
            # each decomposition term dominates its mutual-information parts
            assert np.all(
                res["term_u"] - res["mi_u_r"] - res["mi_u_v"] >= -TOL
            ), (name, N)
            assert np.all(res["term_v"] - res["mi_v_q"] >= -TOL), (name, N)


def test_cross_block_periodic_half_bit(bb00):
    # each size-4 block of the period-4 source carries exactly half a bit of
    # phase information about the other block
    res = pl.cross_block_mi_check(bb00, 4)
    assert np.isclose(res["sum_u"], 0.5, atol=1e-12)
    assert np.isclose(res["sum_v"], 0.5, atol=1e-12)
    assert np.isclose(res["log2_psi0"], 2.0, atol=1e-12)


def test_z_recursion(kernels):
    for name, k in kernels.items():
        for N in (2, 4):
            res = pl.z_recursion_check(k, N)
            for key, vals in res.items():
                if key == "psi0":
                    continue
                assert np.all(np.asarray(vals) >= -TOL), (name, N, key)


def test_surrogate_gap(kernels):
    for name, k in kernels.items():
        for i in (1, 2):
            res = pl.surrogate_gap(k, 2, i)
            assert res["gap"] >= -TOL, (name, i)
            assert res["gap"] <= res["bound"] + TOL, (name, i)
            assert np.isclose(
                res["bound"], pl.h2(min(0.5, np.sqrt(res["mi"] * np.log(2))))
            )


def test_nostuck_parity_exact():
    # fair-coin parity sticks with probability exactly 1/4 per block pair,
    # saturating the bound with residual 1/4
    k = pl.get_preset("iid:0.5")
    res = pl.nostuck_check(k, 2, lambda xb, yb: (sum(xb) % 2) == 1)
    assert res["residual"] == pytest.approx(0.25, abs=1e-15)
    assert res["p_a0"] == pytest.approx(0.5, abs=1e-15)
    assert res["psi_n"] == pytest.approx(1.0, abs=1e-12)


def test_nostuck_random_predicates(kernels, rng):
    for name, k in kernels.items():
        n_out = (2**2) * (k.q**2)
        for _ in range(10):
            table = rng.random(n_out) < rng.uniform(0.2, 0.8)
            res = pl.nostuck_check(k, 2, table)
            assert res["residual"] >= -TOL, name


def test_nostuck_accepts_callable_and_table(bb00):
    f = lambda xb, yb: xb[0] == 1
    res_f = pl.nostuck_check(bb00, 2, f)
    # the equivalent table in block-outcome order (x-major, then y)
    tab = []
    for x0 in (0, 1):
        for x1 in (0, 1):
            for _ in range(bb00.q**2):
                tab.append(x0 == 1)
    res_t = pl.nostuck_check(bb00, 2, np.array(tab, dtype=bool))
    assert res_f["residual"] == pytest.approx(res_t["residual"], abs=1e-15)


def test_run_check_suite_small():
    report = pl.run_check_suite(presets=("iid:0.5", "bb00"), sizes=(2, 4), predicates=5)
    assert report["passed"] is True
    assert report["violations"] == []
    names = {row["check"] for row in report["checks"]}
    for fragment in (
        "supermartingale_slack",
        "cross_block_budget",
        "z_recursion",
        "no_sticking",
        "surrogate_gap",
        "entropy_z_relations",
        "xor_gain_grid",
        "period4:",
    ):
        assert any(fragment in n for n in names), fragment
    for row in report["checks"]:
        assert row["passed"], row
