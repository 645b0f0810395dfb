import numpy as np
import pytest

from netgrad.objective import (DEGENERATE, LOCAL_MAX, LOCAL_MIN, NOT_CRITICAL,
                               REGULAR_SADDLE, AgentObjectives,
                               HessianUnavailableError, Objective, check_gradient,
                               classify, cubic_saddle, double_well_1d,
                               double_well_2d, fd_hessian, from_spec,
                               quadratic_saddle, replicate, robust_regression,
                               split_uniform)

BUNDLED = [quadratic_saddle(2, 1), quadratic_saddle(4, 2), cubic_saddle(),
           double_well_1d(), double_well_2d(), robust_regression(4).total]


def _zero_objective(d=2):
    return Objective(d, lambda x: np.zeros(np.asarray(x).shape[:-1]),
                     lambda x: np.zeros_like(np.asarray(x)),
                     hessian=lambda x: np.zeros((d, d)), vectorized=True)


def test_quadratic_saddle_gradient():
    o = quadratic_saddle(2, 1)
    assert np.array_equal(o.gradient(np.array([1.0, 1.0])), [1.0, -1.0])


def test_quadratic_saddle_hessian():
    o = quadratic_saddle(4, 2)
    H = o.hessian(np.zeros(4))
    assert np.array_equal(H, np.diag([1.0, 1.0, -1.0, -1.0]))


def test_quadratic_saddle_rejects_bad_q():
    with pytest.raises(ValueError):
        quadratic_saddle(3, 0)
    with pytest.raises(ValueError):
        quadratic_saddle(3, 4)


def test_classify_quadratic_origin():
    got = classify(quadratic_saddle(2, 1), [0.0, 0.0])
    assert got.kind == REGULAR_SADDLE and got.q == 1
    got = classify(quadratic_saddle(3, 2), np.zeros(3))
    assert got.kind == REGULAR_SADDLE and got.q == 2


def test_classify_off_critical_point():
    assert classify(quadratic_saddle(2, 1), [1.0, 1.0]).kind == NOT_CRITICAL


def test_classify_exact_q_for_all_small_dims():
    for d in range(2, 7):
        for q in range(1, d + 1):
            got = classify(quadratic_saddle(d, q), np.zeros(d))
            assert got.q == q
            assert got.kind == (LOCAL_MAX if q == d else REGULAR_SADDLE)


def test_classify_degenerate():
    quartic = Objective(1, lambda x: np.asarray(x)[..., 0] ** 4,
                        lambda x: 4.0 * np.asarray(x)[..., 0:1] ** 3,
                        hessian=lambda x: np.array([[12.0 * float(x[0]) ** 2]]))
    assert classify(quartic, [0.0]).kind == DEGENERATE


def test_classify_fd_fallback_and_error():
    no_hess = Objective(2, quadratic_saddle(2, 1).value,
                        quadratic_saddle(2, 1).gradient, hessian=None,
                        vectorized=True)
    got = classify(no_hess, [0.0, 0.0])
    assert got.kind == REGULAR_SADDLE and got.q == 1
    with pytest.raises(HessianUnavailableError):
        classify(no_hess, [0.0, 0.0], fd_fallback=False)


def test_cubic_saddle_values():
    o = cubic_saddle()
    assert np.array_equal(o.gradient(np.zeros(2)), [0.0, 0.0])
    # direct evaluation: 1 - 1 + 1 + 1
    assert float(o.value(np.array([1.0, 1.0]))) == pytest.approx(2.0, abs=1e-14)
    got = classify(o, np.zeros(2))
    assert got.kind == REGULAR_SADDLE and got.q == 1


def test_double_well_1d_gradient_at_zero():
    assert float(double_well_1d().gradient(np.array([0.0]))[0]) == pytest.approx(0.3)


def _polish_root(f, fp, x, iters=6):
    for _ in range(iters):
        x = x - f(x) / fp(x)
    return x


def test_double_well_1d_minima_by_grid_search():
    # oracle: dense grid search, step 1e-6, over [-2, 2]
    o = double_well_1d()
    ws = np.arange(-2.0, 2.0, 1e-6)
    fs = ws**4 - ws**2 + 0.3 * ws
    w_star = ws[np.argmin(fs)]
    assert w_star == pytest.approx(-0.77271, abs=1e-4)
    # the other well is shallower
    right = ws > 0
    w_other = ws[right][np.argmin(fs[right])]
    assert w_other == pytest.approx(0.6149, abs=1e-3)
    assert float(o.value(np.array([w_star]))) < float(o.value(np.array([w_other])))
    # polished minimizer classifies as a local minimum
    w_min = _polish_root(lambda w: 4 * w**3 - 2 * w + 0.3, lambda w: 12 * w**2 - 2, w_star)
    assert classify(o, [w_min]).kind == LOCAL_MIN


def test_double_well_1d_barrier_is_a_local_max():
    w_top = _polish_root(lambda w: 4 * w**3 - 2 * w + 0.3,
                         lambda w: 12 * w**2 - 2, 0.15)
    got = classify(double_well_1d(), [w_top])
    assert got.kind == LOCAL_MAX and got.q == 1


def test_double_well_2d_critical_points():
    o = double_well_2d()
    assert classify(o, [0.0, 0.0]).kind == REGULAR_SADDLE
    for m in ([1.0, 0.0], [-1.0, 0.0]):
        assert classify(o, m).kind == LOCAL_MIN


def test_robust_loss_values():
    from netgrad.objective import robust_loss
    assert float(robust_loss(1.0, 1.0)) == 0.0
    assert float(robust_loss(1.0, 0.0)) == pytest.approx(np.log(9.0))  # ~2.19722
    assert float(robust_loss(0.0, 1.0)) == float(robust_loss(1.0, 0.0))


def test_regression_risk_minimizers():
    # oracle: grid search of the quadrature risk over [-0.5, 1.5]
    risk = robust_regression(1).total
    ws = np.arange(-0.5, 1.5, 1e-3)
    fs = np.asarray(risk.value(ws[:, None]))
    interior = slice(1, -1)
    minima = ws[interior][(fs[1:-1] < fs[:-2]) & (fs[1:-1] < fs[2:])]
    assert len(minima) == 2
    w_local, w_global = sorted(minima, key=lambda w: abs(w - 0.1))[0], \
        sorted(minima, key=lambda w: abs(w - 0.7))[0]
    assert abs(w_local - 0.1) < 0.25
    assert abs(w_global - 0.7) < 0.25
    assert float(risk.value(np.array([w_global]))) < float(risk.value(np.array([w_local])))


def test_regression_agents_sum_to_population_risk():
    bundle = robust_regression(4)
    assert bundle.risk_denominator == 4
    w = np.array([0.3])
    total = float(bundle.total.value(w))
    parts = sum(float(a.value(w)) for a in bundle.agents)
    assert abs(total - parts) <= 1e-12 * (1.0 + abs(total))


def test_regression_unnormalized_variant():
    bundle = robust_regression(4, normalized=False)
    assert bundle.risk_denominator == 1
    w = np.array([0.3])
    per_agent = float(bundle.agents[0].value(w))
    assert float(bundle.total.value(w)) == pytest.approx(4.0 * per_agent, rel=1e-12)


def test_check_gradient_quadratic_is_tiny():
    assert check_gradient(quadratic_saddle(2, 1), np.array([0.3, -0.7]), 1e-5) < 1e-8


def test_check_gradient_cubic():
    assert check_gradient(cubic_saddle(), np.array([1.0, 2.0]), 1e-5) < 1e-6


def test_check_gradient_zero_objective():
    assert check_gradient(_zero_objective(), np.array([0.4, 0.5]), 1e-5) == 0.0


@pytest.mark.parametrize("objective", BUNDLED, ids=lambda o: o.name)
def test_gradients_match_finite_differences(objective):
    rng = np.random.default_rng(5)
    for _ in range(100):
        x = rng.normal(size=objective.dimension)
        norm = np.linalg.norm(x)
        if norm > 5.0:
            x *= 5.0 / norm
        assert check_gradient(objective, x, 1e-5) < 1e-5


@pytest.mark.parametrize("objective", BUNDLED, ids=lambda o: o.name)
def test_hessians_match_finite_differences(objective):
    rng = np.random.default_rng(6)
    for _ in range(20):
        x = rng.normal(size=objective.dimension)
        H = np.asarray(objective.hessian(x))
        assert np.allclose(H, H.T)
        fd = fd_hessian(objective, x)
        scale = 1.0 + np.abs(H).max()
        assert np.abs(H - fd).max() / scale < 1e-4


@pytest.mark.parametrize("objective", [double_well_1d(), double_well_2d()],
                         ids=lambda o: o.name)
def test_coercivity_proxy_on_spheres(objective):
    rng = np.random.default_rng(8)
    for radius in (10.0, 100.0):
        for _ in range(50):
            x = rng.normal(size=objective.dimension)
            x *= radius / np.linalg.norm(x)
            g = np.asarray(objective.gradient(x))
            assert float(g @ x) / (np.linalg.norm(g) * radius) > 0.0


def test_split_uniform_sums_to_total():
    o = double_well_2d()
    bundle = split_uniform(o, 3)
    x = np.array([0.4, -1.2])
    parts = sum(float(a.value(x)) for a in bundle.agents)
    assert parts == pytest.approx(float(o.value(x)), rel=1e-12)
    assert bundle.total is o
    assert bundle.shared_agent is bundle.agents[0]


def test_split_uniform_single_agent_is_identity():
    o = double_well_2d()
    assert split_uniform(o, 1).agents[0] is o


def test_replicate_total_scales():
    o = double_well_1d()
    bundle = replicate(o, 4)
    x = np.array([0.25])
    assert float(bundle.total.value(x)) == pytest.approx(4.0 * float(o.value(x)))
    assert bundle.agents[0] is o


def test_agent_objectives_validates_dimensions():
    with pytest.raises(ValueError):
        AgentObjectives((double_well_1d(), double_well_2d()), double_well_1d())


def test_from_spec_parsing():
    bundle = from_spec("quadratic_saddle:d=3,q=2", 4)
    assert bundle.dimension == 3 and bundle.n_agents == 4
    replica = from_spec("double_well_2d:agents=replica", 4)
    assert replica.agents[0].name == "double_well_2d"
    regression = from_spec("robust_regression:normalized=false", 10)
    assert regression.data is not None and regression.risk_denominator == 1


@pytest.mark.parametrize("bad", ["nope", "quadratic_saddle:d=2,q=1,extra=1",
                                 "double_well_1d:agents=ring",
                                 "robust_regression:q=1", "cubic_saddle:d"])
def test_from_spec_rejects(bad):
    with pytest.raises(ValueError):
        from_spec(bad, 2)
