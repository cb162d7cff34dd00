import math

import numpy as np
import pytest

from stochreach import (DivergenceError, InputSignal, SystemModel, Trajectory,
                        integrate_ode, jacobian_fd, linear_system,
                        ornstein_uhlenbeck, simulate_sde)
from stochreach.dynamics import em_batch, path_normals, time_grid


def make_system(f, n, m=1, sigma=None, p=0):
    sig = sigma if sigma is not None else np.zeros((n, m))
    return SystemModel(state_dim=n, input_dim=p, noise_dim=m,
                       drift=f, diffusion=lambda t, x, u: sig)


# ---------------------------------------------------------------------------
# deterministic integration
# ---------------------------------------------------------------------------

def test_constant_trajectory():
    sys = make_system(lambda t, x, u: np.zeros(2), 2)
    traj = integrate_ode(sys, [1.0, 2.0], t_end=1.0, dt=0.01)
    assert np.all(traj.states == [1.0, 2.0])
    assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(1.0)


def test_linear_decay_matches_closed_form():
    sys = make_system(lambda t, x, u: -x, 1)
    traj = integrate_ode(sys, [1.0], t_end=1.0, dt=1e-3)
    assert traj.states[-1, 0] == pytest.approx(math.exp(-1.0), abs=1e-8)


def test_pendulum_contracts_toward_origin(pend_system):
    x0 = np.array([math.pi / 10, 0.0])
    traj = integrate_ode(pend_system.model, x0, t_end=4.0, dt=1e-3)
    assert np.linalg.norm(traj.states[-1]) < np.linalg.norm(x0)


def test_rk4_observed_order(pend_system):
    # halving dt shrinks the endpoint error by ~2^4 against a fine reference
    x0 = np.array([math.pi / 10, 0.2])
    ref = integrate_ode(pend_system.model, x0, t_end=1.0, dt=5e-4).states[-1]
    e1 = np.linalg.norm(
        integrate_ode(pend_system.model, x0, t_end=1.0, dt=8e-3).states[-1] - ref)
    e2 = np.linalg.norm(
        integrate_ode(pend_system.model, x0, t_end=1.0, dt=4e-3).states[-1] - ref)
    assert math.log2(e1 / e2) >= 3.5


def test_time_grid_rejects_misaligned():
    with pytest.raises(ValueError):
        time_grid(1.0, 0.3)
    with pytest.raises(ValueError):
        time_grid(-1.0, 0.1)
    with pytest.raises(ValueError):
        time_grid(1.0, -0.1)


@pytest.mark.filterwarnings("ignore:overflow")
def test_divergence_error_carries_time():
    from stochreach import Term, build_term_system
    ts = build_term_system([[Term("product", 1.0, var=0, var2=0)]], [[0.0]])
    with pytest.raises(DivergenceError) as exc:
        integrate_ode(ts.model, [3.0], t_end=2.0, dt=1e-3)
    assert 0.0 < exc.value.time <= 2.0


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(times=np.array([0.0, 0.0]), states=np.zeros((2, 1)))
    with pytest.raises(ValueError):
        Trajectory(times=np.array([0.0, 1.0]), states=np.zeros((3, 1)))


# ---------------------------------------------------------------------------
# stochastic simulation
# ---------------------------------------------------------------------------

def test_zero_noise_matches_euler_exactly():
    # with sigma = 0 the stochastic scheme is plain Euler, not RK4
    sys = make_system(lambda t, x, u: -x, 1)
    traj = simulate_sde(sys, [1.0], t_end=0.5, dt=1e-2, seed=0)
    x, xs = 1.0, [1.0]
    for _ in range(50):
        x = x + (-x) * 1e-2
        xs.append(x)
    assert np.array_equal(traj.states[:, 0], np.array(xs))


def test_wiener_variance():
    # pure diffusion: Var X(1) = sigma^2 * t exactly, step-size independent
    sys = make_system(lambda t, x, u: np.zeros_like(x), 1,
                      sigma=np.array([[0.1]]))
    sys = SystemModel(state_dim=1, input_dim=0, noise_dim=1,
                      drift=lambda t, x, u: np.zeros_like(x),
                      diffusion=lambda t, x, u: np.array([[0.1]]),
                      vectorized=True)
    X0 = np.zeros((10_000, 1))
    times = time_grid(1.0, 1e-2)
    out, dead = em_batch(sys, X0, InputSignal.zero(), times, seed=123,
                         checkpoints=np.array([len(times) - 1]))
    xs = out[:, 0, 0]
    assert not dead.any()
    var = xs.var(ddof=1)
    se = 0.01 * math.sqrt(2.0 / (len(xs) - 1))
    assert abs(var - 0.01) <= 3.0 * se


def test_ou_second_moment_matches_closed_form():
    a, sig = -1.0, 0.5
    ts = ornstein_uhlenbeck(a=a, sigma=sig)
    times = time_grid(1.0, 1e-3)
    X0 = np.zeros((10_000, 1))
    out, _ = em_batch(ts.model, X0, InputSignal.zero(), times, seed=9,
                      checkpoints=np.array([len(times) - 1]))
    xs = out[:, 0, 0]
    expected = sig**2 / (2.0 * abs(a)) * (1.0 - math.exp(2.0 * a * 1.0))
    y = xs**2
    se = y.std(ddof=1) / math.sqrt(len(y))
    assert abs(y.mean() - expected) <= 3.0 * se


def test_em_weak_consistency_dt_sweep():
    """The scheme's exact variance converges to the continuous one as dt
    shrinks, and the simulated variance tracks the scheme's exact value at
    every dt (so the observed error is discretization bias plus a
    statistically-controlled sampling term)."""
    a, sig, t_end, n = -1.0, 0.5, 1.0, 20_000
    ts = ornstein_uhlenbeck(a=a, sigma=sig)
    cont = sig**2 / (2.0 * abs(a)) * (1.0 - math.exp(2.0 * a * t_end))
    biases = []
    for dt in (1e-2, 1e-3, 1e-4):
        K = round(t_end / dt)
        r = (1.0 + a * dt) ** 2
        exact_em = sig**2 * dt * (1.0 - r**K) / (1.0 - r)
        biases.append(abs(exact_em - cont))
        if dt > 1e-4:  # keep runtime moderate; bias at 1e-4 checked exactly
            times = time_grid(t_end, dt)
            out, _ = em_batch(ts.model, np.zeros((n, 1)), InputSignal.zero(),
                              times, seed=70, checkpoints=np.array([K]))
            var = out[:, 0, 0].var(ddof=1)
            se = exact_em * math.sqrt(2.0 / (n - 1))
            assert abs(var - exact_em) <= 3.0 * se
    assert biases[0] > biases[1] > biases[2]


def test_sde_determinism():
    ts = ornstein_uhlenbeck()
    a = simulate_sde(ts.model, [1.0], t_end=1.0, dt=1e-2, seed=42)
    b = simulate_sde(ts.model, [1.0], t_end=1.0, dt=1e-2, seed=42)
    assert np.array_equal(a.states, b.states)
    c = simulate_sde(ts.model, [1.0], t_end=1.0, dt=1e-2, seed=42,
                     path_index=1)
    assert not np.array_equal(a.states, c.states)


def test_path_normals_counter_properties():
    z1 = path_normals(7, 0, 100, 2)
    z2 = path_normals(7, 0, 100, 2)
    assert np.array_equal(z1, z2)
    assert not np.array_equal(z1, path_normals(7, 1, 100, 2))
    assert not np.array_equal(z1, path_normals(8, 0, 100, 2))
    # prefix property: a shorter draw is a prefix of a longer one
    assert np.array_equal(z1[:50], path_normals(7, 0, 50, 2))


def test_batch_agrees_with_single_path():
    ts = ornstein_uhlenbeck()
    times = time_grid(0.5, 1e-2)
    X0 = np.array([[1.0], [2.0], [0.5]])
    out, _ = em_batch(ts.model, X0, InputSignal.zero(), times, seed=5)
    for i in range(3):
        single = simulate_sde(ts.model, X0[i], t_end=0.5, dt=1e-2, seed=5,
                              path_index=i)
        assert np.allclose(out[i], single.states, rtol=1e-14, atol=0.0)


@pytest.mark.filterwarnings("ignore:overflow")
def test_sde_divergence_raises_for_single_path():
    from stochreach import Term, build_term_system
    ts = build_term_system([[Term("product", 1.0, var=0, var2=0)]], [[0.1]])
    with pytest.raises(DivergenceError) as exc:
        simulate_sde(ts.model, [5.0], t_end=1.0, dt=1e-3, seed=3)
    assert 0.0 < exc.value.time <= 1.0


@pytest.mark.filterwarnings("ignore:overflow")
def test_sde_divergent_path_flagged():
    from stochreach import Term, build_term_system
    ts = build_term_system([[Term("product", 1.0, var=0, var2=0)]], [[0.1]])
    times = time_grid(1.0, 1e-3)
    X0 = np.array([[5.0], [0.1]])
    out, dead = em_batch(ts.model, X0, InputSignal.zero(), times, seed=3,
                         checkpoints=np.array([len(times) - 1]),
                         raise_on_divergence=False)
    assert dead[0] and not dead[1]
    assert np.isnan(out[0, 0, 0]) and np.isfinite(out[1, 0, 0])


# ---------------------------------------------------------------------------
# Jacobians
# ---------------------------------------------------------------------------

def test_jacobian_fd_linear():
    A = np.array([[0.5, -1.0], [2.0, 0.25]])
    ts = linear_system(A)
    J = jacobian_fd(ts.model, 0.0, [0.3, -0.7])
    assert np.allclose(J, A, atol=1e-9)


def test_jacobian_fd_pendulum_at_origin(pend_system):
    J = jacobian_fd(pend_system.model, 0.0, [0.0, 0.0])
    assert np.allclose(J, [[0.0, 1.0], [-10.0, -20.0]], atol=1e-7)


def test_jacobian_fd_hand_differentiated():
    def f(t, x, u):
        return np.array([math.sin(x[0]), x[0] * x[1]])

    sys = make_system(f, 2)
    J = jacobian_fd(sys, 0.0, [0.0, 1.0])
    assert np.allclose(J, [[1.0, 0.0], [1.0, 0.0]], atol=1e-8)


def test_analytic_jacobian_close_to_fd(pend_system):
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = rng.uniform(-1.0, 1.0, size=2)
        J_fd = jacobian_fd(pend_system.model, 0.0, x)
        J_an = pend_system.model.jacobian(0.0, x, np.zeros(0))
        err = np.linalg.norm(J_fd - J_an) / np.linalg.norm(J_an)
        assert err < 1e-5


def test_input_signal_containment_check():
    from stochreach import Ellipsoid, WeightedNorm

    ball = Ellipsoid(np.zeros(1), 0.5, WeightedNorm(np.eye(1)))
    inside = InputSignal(fn=lambda t: np.array([0.4 * math.sin(t)]), dim=1,
                         container=ball)
    outside = InputSignal(fn=lambda t: np.array([0.4 + 0.2 * t]), dim=1,
                          container=ball)
    ts = np.linspace(0.0, 1.0, 11)
    assert inside.check_containment(ts)
    assert not outside.check_containment(ts)
    assert InputSignal.zero(2).check_containment(ts)


def test_input_signal_and_rk4_with_input():
    A = np.array([[-1.0]])
    B = np.array([[1.0]])
    ts = linear_system(A, B)
    u = InputSignal.constant([2.0])
    traj = integrate_ode(ts.model, [0.0], u, t_end=1.0, dt=1e-3)
    # x' = -x + 2 from 0: x(t) = 2(1 - e^-t)
    assert traj.states[-1, 0] == pytest.approx(2.0 * (1 - math.exp(-1.0)),
                                               abs=1e-8)
