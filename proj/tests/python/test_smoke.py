import math

import pytest

import z2neck

GEOMETRY = {"p": "1", "s": "10"}


def test_experiment_registry():
    names = [name for name, _ in z2neck.experiments()]
    assert "decay_scan" in names and "oracle_convergence" in names
    assert len(names) == 11


def test_alpha_matches_closed_form():
    for n, m in [(1, 0), (3, 0), (1, 1), (5, -2)]:
        assert z2neck.alpha(n, m) == pytest.approx(math.sqrt(n * n / 16 + m * m), rel=1e-15)


def test_metric_is_positive_and_cylindrical_in_the_neck():
    g_rr, g_pp, g_tt = z2neck.metric(GEOMETRY, 8.0)
    assert (g_rr, g_pp, g_tt) == pytest.approx((1.0, 16.0, 1.0))
    assert z2neck.r_total(GEOMETRY) > 14.0


def test_ratio_bound_is_exact_for_m0():
    assert z2neck.ratio_bound(GEOMETRY, 1, 0, 20.0) == pytest.approx(1.0, abs=1e-8)
    assert z2neck.ratio_bound(GEOMETRY, 3, 2, 20.0) <= 2.0


def test_conjugate_symmetry_of_mode_coefficients():
    u = z2neck.mode_coefficient(GEOMETRY, 11, 1, 1)
    v = z2neck.mode_coefficient(GEOMETRY, 11, -1, -1)
    assert v == pytest.approx(u.conjugate(), rel=1e-14)


def test_run_ratio_bound_experiment():
    r = z2neck.run("ratio_bound", n_values=[1], m_max=1, s_grid=[5, 10])
    assert r["passed"]
    assert r["header"] == ["s", "n", "m", "ratio"]
    assert len(r["rows"]) == 2 * 3
    assert all(c["citation"] for c in r["criteria"])


def test_unknown_key_is_rejected():
    with pytest.raises(ValueError, match="unknown key"):
        z2neck.run("decay_scan", bogus=1)


def test_even_mode_is_rejected():
    with pytest.raises(ValueError, match="odd"):
        z2neck.run("decay_scan", modes="2:0")
