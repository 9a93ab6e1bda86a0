import numpy as np
import pytest

from dataclasses import replace

from fraclab import (
    DoubleWell,
    KernelSpec,
    MinimizeOptions,
    TransitionProblem,
    lambda_continuity_probe,
    predicted_limit,
    scaling_exponent,
    transition_energy,
    transition_energy_curve,
)

OPTS = MinimizeOptions(grad_tol=1e-5)


def small_problem(**kw):
    base = dict(kernel=KernelSpec.constant(1.0), mode="homogeneous", omega=1,
                T=2.0, T_out=6.0, n_cells=192, well=DoubleWell(0.0), k=0, s=0.75)
    base.update(kw)
    return TransitionProblem(**base)


def test_transition_energy_positive_and_clamped():
    tp = small_problem()
    res = transition_energy(tp, OPTS)
    assert res.energy > 0.0
    x = res.profile.grid.nodes()
    outside = np.abs(x) >= tp.T
    np.testing.assert_array_equal(res.profile.values[outside], np.sign(x[outside]))


def test_transition_problem_validation():
    with pytest.raises(ValueError):
        small_problem(T_out=2.5)  # below max(T, 3)
    with pytest.raises(ValueError):
        small_problem(mode="nonsense")
    with pytest.raises(ValueError):
        small_problem(omega=0)
    with pytest.raises(ValueError):
        small_problem(k=0, s=0.5)


def test_jump_direction_symmetry_even_well_even_kernel():
    tp = small_problem(kernel=KernelSpec.cos_sum(2.5, 1.0), mode="lambda", lam=1.0)
    up = transition_energy(tp, OPTS).energy
    down = transition_energy(replace(tp, omega=-1), OPTS).energy
    assert abs(up - down) / up <= 1e-3


def test_constant_kernel_scaling_law_small():
    c = 4.0
    k, s = 0, 0.75
    lam = c ** scaling_exponent(k, s)
    tp1 = small_problem()
    m1 = transition_energy(tp1, OPTS).energy
    tpc = small_problem(kernel=KernelSpec.constant(c), mode="lambda",
                        T=2.0 * lam, T_out=6.0 * lam)
    mc = transition_energy(tpc, OPTS).energy
    assert mc / m1 == pytest.approx(lam, rel=1e-3)


def test_argmin_invariance_under_kernel_scaling():
    # the c-problem on the lambda-enlarged grid has the same nodal minimizer
    c = 4.0
    k, s = 0, 0.75
    lam = c ** scaling_exponent(k, s)
    tp1 = small_problem()
    r1 = transition_energy(tp1, OPTS)
    tpc = small_problem(kernel=KernelSpec.constant(c), mode="lambda",
                        T=2.0 * lam, T_out=6.0 * lam)
    rc = transition_energy(tpc, OPTS)
    np.testing.assert_allclose(rc.profile.values, r1.profile.values, atol=2e-4)


def test_curve_monotone_and_flag():
    tp = small_problem(n_cells=160)
    pts, _ = transition_energy_curve(tp, [2.0, 4.0], OPTS)
    assert pts[1].m_hat <= pts[0].m_hat + 1e-6
    with pytest.raises(ValueError):
        transition_energy_curve(tp, [4.0, 2.0], OPTS)


def test_sandwich_bounds_at_matched_discretization():
    kern = KernelSpec.cos_sum(2.5, 1.0)
    tp_a = small_problem(kernel=kern, mode="lambda", lam=1.0)
    tp_1 = small_problem()
    m_a = transition_energy(tp_a, OPTS).energy
    m_1 = transition_energy(tp_1, OPTS).energy
    assert min(kern.alpha_a, 1.0) * m_1 - 1e-6 <= m_a
    assert m_a <= max(kern.beta_a, 1.0) * m_1 + 1e-6


def test_predicted_limit_examples():
    kern1 = KernelSpec.constant(1.0)
    m = 4.2
    for mode in ("supercritical", "subcritical", "homogeneous"):
        assert predicted_limit(kern1, mode, 0, 0.75, 1, 0, m_hat=m) == pytest.approx(m)
    assert predicted_limit(kern1, "lambda", 0, 0.75, 1, 0,
                           m_hat_up=m, m_hat_down=9.9) == pytest.approx(m)

    kern = KernelSpec.cos_sum(2.5, 1.0)
    sub = predicted_limit(kern, "subcritical", 0, 0.75, 1, 0, m_hat=m)
    sup = predicted_limit(kern, "supercritical", 0, 0.75, 1, 0, m_hat=m)
    assert sub / sup == pytest.approx(0.2 ** (2.0 / 3.0), rel=1e-12)
    assert sub / sup == pytest.approx(0.34199518933533946, rel=1e-6)

    two = predicted_limit(kern, "supercritical", 0, 0.75, 1, 1, m_hat=m)
    assert two == pytest.approx(2.0 * sup, rel=1e-12)


def test_predicted_limit_requires_estimates():
    kern = KernelSpec.constant(1.0)
    with pytest.raises(ValueError):
        predicted_limit(kern, "lambda", 0, 0.75, 1, 0)
    with pytest.raises(ValueError):
        predicted_limit(kern, "supercritical", 0, 0.75, 1, 0)


def test_lambda_continuity_constant_kernel_invariant():
    tp = small_problem(kernel=KernelSpec.constant(2.0), mode="lambda", lam=1.0)
    a, b, c = lambda_continuity_probe(tp, 0.05, OPTS)
    assert a == pytest.approx(b, rel=1e-6)
    assert a == pytest.approx(c, rel=1e-6)
    assert min(a, b, c) > 0.0


def test_supercritical_and_subcritical_modes_reduce_to_constants():
    kern = KernelSpec.cos_sum(2.5, 1.0)
    tp_sup = small_problem(kernel=kern, mode="supercritical")
    tp_bar = small_problem(kernel=KernelSpec.constant(kern.a_bar), mode="lambda")
    assert transition_energy(tp_sup, OPTS).energy == pytest.approx(
        transition_energy(tp_bar, OPTS).energy, rel=1e-9)
    tp_sub = small_problem(kernel=kern, mode="subcritical")
    tp_inf = small_problem(kernel=KernelSpec.constant(kern.a_inf), mode="lambda")
    assert transition_energy(tp_sub, OPTS).energy == pytest.approx(
        transition_energy(tp_inf, OPTS).energy, rel=1e-9)


def test_transition_energy_cos_prod_kernel():
    kern = KernelSpec.cos_prod(2.0, 0.7)
    tp = small_problem(kernel=kern, mode="lambda", lam=1.0)
    res = transition_energy(tp, OPTS)
    m1 = transition_energy(small_problem(), OPTS).energy
    assert res.energy > 0
    assert min(kern.alpha_a, 1.0) * m1 - 1e-6 <= res.energy <= max(kern.beta_a, 1.0) * m1 + 1e-6


def test_omega_swap_negates_and_reflects_minimizer():
    # even well, even kernel: the down minimizer is the negated up minimizer,
    # which coincides with its reflection since the up minimizer is odd
    tp = small_problem(kernel=KernelSpec.cos_sum(2.5, 1.0), mode="lambda", lam=1.0)
    up = transition_energy(tp, OPTS).profile.values
    down = transition_energy(replace(tp, omega=-1), OPTS).profile.values
    np.testing.assert_allclose(down, -up, atol=5e-4)
    np.testing.assert_allclose(up, -up[::-1], atol=5e-4)
