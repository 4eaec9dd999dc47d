import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blk2d.analysis import (LadderError, PreconditionError, SparseSeriesError, _sample_rngs, check_ladyzhenskaya,
                            check_poincare_bounds, check_sup_bound, check_nirenberg, check_steklov, comparison_monitor,
                            decay_rate, energy_identity_residual, fit_decay, fit_nirenberg_constants,
                            inequality_sweep, linear_response, mms_convergence, random_compatible_field, random_profile,
                            residual_reduction, stability_experiment, sup_constant, verify_theorem,
                            weighted_monitor)
from blk2d.cli import preset_config
from blk2d.dynamics import make_initial
from blk2d.functionals import CSV_COLUMNS, DiagnosticsRecord, DiagnosticsSeries
from blk2d.geometry import build_domain

PI = math.pi


def synthetic(t, **cols):
    """A series whose named columns are given and all others zero."""
    series = DiagnosticsSeries(dt=float(t[1] - t[0]))
    for i, ti in enumerate(t):
        vals = {c: 0.0 for c in CSV_COLUMNS}
        vals["t"] = float(ti)
        vals.update({k: float(v[i]) for k, v in cols.items()})
        series.append(DiagnosticsRecord(**vals))
    return series


def first_eigen(setup):
    g = np.zeros((setup.basis.n_modes, setup.grid.nx))
    g[0] = math.sqrt(setup.domain.B / 2) * np.sin(PI * setup.grid.x / setup.domain.L)
    return g


def poly(setup):
    x, L = setup.grid.x, setup.domain.L
    g = np.zeros((setup.basis.n_modes, setup.grid.nx))
    g[0] = math.sqrt(setup.domain.B / 2) * x**2 * (L - x) ** 3
    return g


# -- inequalities --------------------------------------------------------------

def test_steklov_sharp_and_second_mode():
    x = np.linspace(0, 2.0, 258)
    sharp = check_steklov(np.sin(PI * x / 2.0), 2.0)
    assert sharp.passed and abs(sharp.margin) <= 1e-3 * sharp.lhs
    second = check_steklov(np.sin(2 * PI * x / 2.0), 2.0)
    norm = second.lhs / (PI / 2.0) ** 2
    assert second.rhs / norm == pytest.approx(4 * PI**2 / 4.0, rel=1e-3)
    assert second.margin > 0


def test_steklov_rejects_incompatible():
    x = np.linspace(0, 1, 64)
    with pytest.raises(PreconditionError):
        check_steklov(np.cos(x), 1.0)


def test_poincare_bounds_sharp_on_first_eigenfunction(square256):
    for rep in check_poincare_bounds(first_eigen(square256), square256):
        assert rep.passed, rep
        assert abs(rep.margin) <= 1e-3 * rep.lhs, rep


def test_poincare_bounds_strict_on_polynomial(square):
    reps = check_poincare_bounds(poly(square), square)
    assert [r.name for r in reps] == ["grad_vs_l2", "lap_vs_l2", "lap_vs_grad", "bilap_vs_lap"]
    assert all(r.margin > 0 for r in reps)


def test_zero_field_gives_zero_margins(square):
    z = np.zeros((8, square.grid.nx))
    reps = check_poincare_bounds(z, square) + [check_sup_bound(z, square), check_ladyzhenskaya(z, square)]
    assert all(r.passed and r.margin == 0 for r in reps)
    x = np.linspace(0, PI, 100)
    assert check_nirenberg(np.zeros_like(x), PI, 1, 2, 1.0).passed


def test_full_node_field_must_vanish_on_boundary(square):
    G = np.ones((8, square.grid.nx + 2))
    with pytest.raises(PreconditionError):
        check_poincare_bounds(G, square)


def test_sup_bound_example(square256):
    rep = check_sup_bound(first_eigen(square256), square256)
    assert sup_constant(2.0) == pytest.approx(1.75)
    assert rep.lhs == pytest.approx(1.0, rel=1e-4)  # x = pi/2 is not a node
    assert rep.rhs == pytest.approx(1.75 * PI**2, rel=1e-3)
    assert rep.passed


def test_ladyzhenskaya_example(square256):
    rep = check_ladyzhenskaya(first_eigen(square256), square256)
    # ||f||_4^2 = 3 pi / 8; 2 ||f|| ||grad f|| = 2 (pi/2)(pi / sqrt 2)
    assert rep.lhs == pytest.approx(3 * PI / 8, rel=1e-4)
    assert rep.rhs == pytest.approx(PI**2 / math.sqrt(2), rel=1e-4)
    assert rep.margin > 0


def test_nirenberg_single_frequency_sharp():
    x = np.linspace(0, PI, 514)
    rep = check_nirenberg(np.sin(x), PI, 1, 2, A1=1.0)
    assert rep.passed and abs(rep.margin) <= 1e-3 * rep.rhs
    with pytest.raises(ValueError):
        check_nirenberg(np.sin(x), PI, 3, 3, A1=1.0)


def test_nirenberg_fitted_constants_cover_corpus():
    c = fit_nirenberg_constants(PI, 128, 4, 5, count=200, seed=7)
    assert c["A1"] == pytest.approx(1.25 * c["max_ratio"]) and c["A2"] == 0.0
    x = np.linspace(0, PI, 130)
    for rng in _sample_rngs(7, 200):
        assert check_nirenberg(random_profile(x, PI, rng), PI, 4, 5, c["A1"]).passed


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_inequalities_scale_covariant(seed, c):
    s = build_domain("rectangle", PI, 2.0, 64, 6)
    g = random_compatible_field(s, np.random.default_rng(seed))
    base = check_poincare_bounds(g, s) + [check_sup_bound(g, s)]
    scaled = check_poincare_bounds(c * g, s) + [check_sup_bound(c * g, s)]
    for b, r in zip(base, scaled):
        assert b.passed == r.passed
        assert r.margin == pytest.approx(c * c * b.margin, rel=1e-9, abs=1e-9 * c * c * abs(b.rhs))


@given(st.integers(0, 2**32 - 1))
def test_random_compatible_fields_pass(seed):
    s = build_domain("rectangle", PI, PI, 96, 6)
    g = random_compatible_field(s, np.random.default_rng(seed))
    assert not g[3:].any()  # at most N/2 active modes
    reps = check_poincare_bounds(g, s) + [check_sup_bound(g, s), check_ladyzhenskaya(g, s)]
    assert all(r.passed for r in reps)


def test_sweep_reproducible_and_vacuous():
    s = build_domain("rectangle", PI, PI, 64, 4)
    a = inequality_sweep(s, 5, seed=3, calibration_count=50)
    b = inequality_sweep(s, 5, seed=3, calibration_count=50)
    assert a == b and a.all_passed
    empty = inequality_sweep(s, 0, seed=3, calibration_count=50)
    assert empty.all_passed and empty.passes == {}


def test_sample_streams_partition_independent():
    short = [r.random() for r in _sample_rngs(11, 5)]
    long = [r.random() for r in _sample_rngs(11, 10)]
    assert short == long[:5]


# -- energy balance ------------------------------------------------------------

def test_energy_residual_zero_solution():
    t = np.linspace(0, 1, 11)
    res = energy_identity_residual(synthetic(t), gamma=1.0)
    assert not res.r.any() and res.relative == 0.0


def test_energy_residual_needs_three_samples():
    with pytest.raises(SparseSeriesError):
        energy_identity_residual(synthetic(np.array([0.0, 0.1])), 1.0)


def test_energy_residual_second_order_in_sampling():
    # l2 = e^{-2t}, lap = e^{-2t}: exact identity, only the centered difference errs
    out = []
    for n in (101, 201):
        t = np.linspace(0, 1, n)
        out.append(energy_identity_residual(synthetic(t, l2_sq=np.exp(-2 * t), lap_sq=np.exp(-2 * t)), 0.0))
    assert out[1].relative < 1e-4
    assert residual_reduction(out[0], out[1]) == pytest.approx(4.0, rel=0.01)
    assert out[0].window[0] == pytest.approx(0.1)


# -- decay ---------------------------------------------------------------------

def test_fit_decay_examples():
    t = np.linspace(0, 2, 201)
    assert fit_decay(t, 7 * np.exp(-3 * t)) == pytest.approx(3.0, abs=1e-10)
    noisy = np.exp(-3 * t) + 1e-16 * np.random.default_rng(0).standard_normal(t.size)
    assert fit_decay(t, noisy) == pytest.approx(3.0, abs=1e-6)
    assert fit_decay(t, np.full_like(t, 4.2)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(SparseSeriesError):
        fit_decay(t, np.exp(-t), window=(5.0, 6.0))


@given(st.floats(1e-6, 1e6), st.floats(0.0, 50.0))
def test_fit_decay_scale_invariant(c, rate):
    t = np.linspace(0, 1, 51)
    E = np.exp(-rate * t) * (1 + 0.1 * np.sin(7 * t))
    assert fit_decay(t, c * E) == pytest.approx(fit_decay(t, E), abs=1e-8 * max(rate, 1.0))


def test_decay_rates_from_closed_forms():
    assert decay_rate("6.1", PI, PI, 1.0) == pytest.approx(4.0)
    assert decay_rate("6.2", PI, PI, -1.0) == pytest.approx(12.0)
    assert decay_rate("6.3", 40.0, PI / 2, 0.125) == pytest.approx(8.0)
    assert decay_rate("6.4", 40.0, PI / 2, -1.0) == pytest.approx(40.0)
    # at gamma = 0 the two rectangle rates coincide: 2 a^2 = 8 for a = 2
    assert decay_rate("6.1", PI, PI, 0.0) == decay_rate("6.2", PI, PI, 0.0) == pytest.approx(8.0)
    with pytest.raises(ValueError):
        decay_rate("7.1", 1, 1, 0)


@given(st.floats(0.5, 5.0), st.floats(0.5, 5.0), st.floats(-3.0, 3.0))
def test_decay_rate_is_pure_formula(L, B, gamma):
    a = PI**2 / L**2 + PI**2 / B**2
    assert decay_rate("6.1", L, B, gamma) == pytest.approx(2 * a * a * (1 - gamma / a))
    assert decay_rate("6.2", L, B, gamma) == pytest.approx(2 * (abs(gamma) / a + 1) * a * a)
    assert decay_rate("6.3", L, B, gamma) == decay_rate("6.3", 2 * L, B, -gamma)


def test_verify_theorem_on_synthetic_decay(square):
    t = np.linspace(0, 1, 101)
    rep = verify_theorem("6.1", synthetic(t, l2_sq=np.exp(-5 * t)), square, 1.0)
    assert rep.chi_theory == pytest.approx(4.0) and rep.passed and rep.fitted_ok
    slow = verify_theorem("6.1", synthetic(t, l2_sq=np.exp(-3 * t)), square, 1.0)
    assert slow.passed is False and slow.max_ratio > 1.05


def test_verify_theorem_hypothesis_failure_is_not_asserted(square):
    t = np.linspace(0, 1, 11)
    rep = verify_theorem("6.1", synthetic(t, l2_sq=np.ones_like(t)), square, gamma=3.0)
    assert rep.condition_ok is False and rep.passed is None
    assert rep.hypotheses["b < 1"] is False
    assert verify_theorem("6.2", synthetic(t, l2_sq=np.ones_like(t)), square, gamma=1.0).passed is None


def test_verify_theorem_gamma_zero_notes_both_rates(square):
    t = np.linspace(0, 1, 11)
    rep = verify_theorem("6.2", synthetic(t, l2_sq=np.exp(-9 * t)), square, 0.0)
    assert rep.chi_theory == pytest.approx(8.0) and rep.passed
    assert "gamma = 0" in rep.note


def test_half_strip_hypotheses(strip):
    t = np.linspace(0, 1, 11)
    ok = verify_theorem("6.3", synthetic(t, weighted=np.exp(-9 * t)), strip, 0.125)
    assert ok.condition_ok and ok.energy == "weighted" and ok.passed
    big = verify_theorem("6.3", synthetic(t, weighted=100 * np.exp(-9 * t)), strip, 0.125)
    assert big.hypotheses["smallness"] is False and big.passed is None
    assert verify_theorem("6.4", synthetic(t, weighted=np.exp(-41 * t)), strip, 0.5).passed is None


# -- monitor -------------------------------------------------------------------

def test_comparison_monitor_cases():
    t = np.linspace(0, 1, 11)
    assert comparison_monitor(t, np.exp(-t), 16.0, 2 / 9).passed
    flat = comparison_monitor(t, np.ones_like(t), 16.0, 2 / 9)
    assert flat.applicable and not flat.passed and flat.first_failure == pytest.approx(0.1)
    out = comparison_monitor(t, 100 * np.exp(-t), 16.0, 2 / 9)
    assert not out.applicable and out.initial_margin < 0


def test_weighted_monitor_uses_rate_constants(strip):
    t = np.linspace(0, 1, 11)
    rep = weighted_monitor(synthetic(t, weighted=np.exp(-t)), strip)
    assert rep.initial_margin == pytest.approx(16.0 - 2.0 / 9.0)


# -- continuous dependence -----------------------------------------------------

@pytest.fixture(scope="module")
def small_case():
    cfg = preset_config("thm61", nx=48, t_end=0.2)
    setup = cfg.setup()
    return make_initial("rect_poly", 1.0, setup), setup, cfg.params(), cfg.solver()


def test_stability_zero_perturbation(small_case):
    rep = stability_experiment(*small_case, delta=0.0, c_hat=0.0)
    assert not rep.z_norm.any() and rep.within_envelope


def test_stability_linear_response(small_case):
    a = stability_experiment(*small_case, delta=1e-6, c_hat=0.0)
    b = stability_experiment(*small_case, delta=5e-7, c_hat=0.0)
    assert a.z_norm[0] == pytest.approx(1e-6, rel=1e-9)
    ratio = linear_response(a, b)
    assert np.all(np.abs(ratio - 2.0) < 0.2)


# -- manufactured solutions ------------------------------------------------------

def test_mms_needs_three_levels():
    with pytest.raises(LadderError):
        mms_convergence(nx_levels=(64, 128))


def test_mms_zero_amplitude_has_zero_error():
    rep = mms_convergence((32, 48, 64), (4e-3, 2e-3, 1e-3), t_end=0.02, spatial_dt=2e-3, temporal_nx=32,
                          amplitude=0.0)
    assert all(e == 0 for e in rep.spatial_errors + rep.temporal_diffs)
    assert rep.passed()
