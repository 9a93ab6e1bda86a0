import numpy as np
import pytest

from fraclab import (
    ClampSpec,
    DoubleWell,
    GridProfile,
    MinimizeOptions,
    NumericalFailure,
    check_gradient,
    make_grid,
    minimize,
)


def quadratic_target(center):
    def energy(u):
        return float(np.sum((u - center) ** 2))

    def grad(u):
        return 2.0 * (u - center)

    return energy, grad


def test_minimize_quadratic_converges_to_target():
    g = make_grid(0.0, 1.0, 16)
    energy, grad = quadratic_target(1.0)
    init = GridProfile(g, np.zeros(g.n_nodes))
    res = minimize(energy, grad, init, ClampSpec.free(g.n_nodes),
                   MinimizeOptions(grad_tol=1e-9))
    assert res.converged
    assert res.final_grad_norm <= 1e-9
    np.testing.assert_allclose(res.profile.values, 1.0, atol=1e-9)
    assert res.energy == pytest.approx(0.0, abs=1e-18)


def test_minimize_preserves_clamped_nodes_exactly():
    g = make_grid(0.0, 1.0, 16)
    n = g.n_nodes
    rng = np.random.default_rng(2)
    mask = np.zeros(n, dtype=bool)
    mask[[0, 3, 8, n - 1]] = True
    fixed = np.where(mask, rng.uniform(-2, 2, n), 0.0)
    init_vals = np.where(mask, fixed, 0.5)
    energy, grad = quadratic_target(-1.0)
    res = minimize(energy, grad, GridProfile(g, init_vals), ClampSpec(mask, fixed))
    np.testing.assert_array_equal(res.profile.values[mask], fixed[mask])
    np.testing.assert_allclose(res.profile.values[~mask], -1.0, atol=1e-6)


def test_minimize_rejects_initial_violating_clamp():
    g = make_grid(0.0, 1.0, 4)
    mask = np.array([True, False, False, False, False])
    clamp = ClampSpec(mask, np.array([1.0, 0, 0, 0, 0]))
    energy, grad = quadratic_target(0.0)
    with pytest.raises(ValueError):
        minimize(energy, grad, GridProfile(g, np.zeros(5)), clamp)


def test_minimize_single_free_node_descends_to_nearest_well():
    g = make_grid(0.0, 1.0, 2)
    well = DoubleWell(0.0)
    mask = np.array([True, False, True])
    fixed = np.array([0.5, 0.0, 0.5])
    init = np.array([0.5, 0.5, 0.5])

    def energy(u):
        return float(well.value(u[1]))

    def grad(u):
        out = np.zeros_like(u)
        out[1] = well.deriv(u[1])
        return out

    res = minimize(energy, grad, GridProfile(g, init), ClampSpec(mask, fixed),
                   MinimizeOptions(grad_tol=1e-10))
    assert res.profile.values[1] == pytest.approx(1.0, abs=1e-8)


def test_minimize_monotone_energy_and_determinism():
    g = make_grid(0.0, 1.0, 32)
    rng = np.random.default_rng(4)
    target = rng.standard_normal(g.n_nodes)
    seen = []

    def energy(u):
        e = float(np.sum((u - target) ** 4) + np.sum(u * u))
        return e

    def grad(u):
        return 4.0 * (u - target) ** 3 + 2.0 * u

    init = GridProfile(g, np.zeros(g.n_nodes))
    opts = MinimizeOptions(grad_tol=1e-8, max_iters=5000)

    def run():
        energies = []
        orig = energy

        def tracking(u):
            e = orig(u)
            energies.append(e)
            return e

        res = minimize(tracking, grad, init, ClampSpec.free(g.n_nodes), opts)
        return res, energies

    res1, _ = run()
    res2, _ = run()
    np.testing.assert_array_equal(res1.profile.values, res2.profile.values)
    assert res1.energy == res2.energy
    assert res1.iterations == res2.iterations

    # accepted energies are non-increasing
    res, energies = run()
    accepted = [energies[0]]
    for e in energies:
        if e <= accepted[-1]:
            accepted.append(e)
    assert res.energy <= accepted[0]
    assert res.energy == min(accepted)


def test_minimize_raises_numerical_failure_on_nan():
    g = make_grid(0.0, 1.0, 4)

    def energy(u):
        return float("nan") if np.max(u) > 0.5 else float(np.sum(u * u))

    def grad(u):
        return 2.0 * u

    init = GridProfile(g, np.full(5, 1.0))
    with pytest.raises(NumericalFailure):
        minimize(energy, grad, init, ClampSpec.free(5))


def test_clamp_spec_requires_free_node():
    with pytest.raises(ValueError):
        ClampSpec(np.ones(4, dtype=bool), np.zeros(4))


def test_check_gradient_quadratic_is_tiny():
    g = make_grid(0.0, 1.0, 12)
    energy, grad = quadratic_target(0.3)
    p = GridProfile(g, np.linspace(-1, 1, g.n_nodes))
    assert check_gradient(energy, grad, p) <= 1e-9


def test_check_gradient_detects_scaled_gradient():
    g = make_grid(0.0, 1.0, 12)
    energy, grad = quadratic_target(0.3)
    bad = lambda u: 2.0 * grad(u)  # noqa: E731
    p = GridProfile(g, np.linspace(-1, 1, g.n_nodes))
    err = check_gradient(energy, bad, p)
    assert err == pytest.approx(1.0, abs=0.05)
