import itertools
import math

import numpy as np
import pytest
from conftest import random_cost, random_instance

from spherelight.decompose import IlluminationParams
from spherelight.errors import UnsupportedSizeError
from spherelight.sphere import generate_anchors
from spherelight.transport import (
    SinkhornConfig,
    entropy,
    exact_emd,
    sinkhorn,
    sml,
    sml_gradient,
    sml_rgb,
)

linprog = pytest.importorskip("scipy.optimize").linprog


def lp_emd(a, b, C):
    m, k = C.shape
    A = np.zeros((m + k, m * k))
    for i in range(m):
        A[i, i * k : (i + 1) * k] = 1
    for j in range(k):
        A[m + j, j::k] = 1
    res = linprog(C.ravel(), A_eq=A, b_eq=np.r_[a, b], bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def delta(n, i):
    d = np.zeros(n)
    d[i] = 1.0
    return d


# -- exact EMD ---------------------------------------------------------------


def test_emd_matches_linear_program(rng):
    for n in (2, 3, 5, 8, 12, 20):
        for _ in range(10):
            a, b, C = random_instance(rng, n)
            assert exact_emd(a, b, C).cost == pytest.approx(lp_emd(a, b, C), abs=1e-12)


def test_emd_uniform_matches_permutation_enumeration(rng):
    # uniform marginals: an optimal plan is a scaled permutation (Birkhoff)
    for n in (3, 4, 5, 6):
        C = random_cost(rng, n)
        u = np.full(n, 1.0 / n)
        best = min(sum(C[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))) / n
        assert exact_emd(u, u[::-1].copy(), C).cost == pytest.approx(best, abs=1e-12)


def test_emd_two_by_two_block():
    C = random_cost(np.random.default_rng(7), 4)
    U = np.array([0.5, 0.5, 0, 0])
    V = np.array([0, 0, 0.5, 0.5])
    matchings = [C[0, 2] + C[1, 3], C[0, 3] + C[1, 2]]
    assert exact_emd(U, V, C).cost == pytest.approx(0.5 * min(matchings), abs=1e-15)


def test_emd_deltas_and_identity(rng):
    C = random_cost(rng, 6)
    assert exact_emd(delta(6, 1), delta(6, 4), C).cost == pytest.approx(C[1, 4], abs=1e-15)
    U = rng.dirichlet(np.ones(6))
    assert exact_emd(U, U, C).cost == pytest.approx(0.0, abs=1e-15)


def test_emd_degenerate_integer_costs(rng):
    # heavy ties and degenerate bases exercise the anti-cycling rule
    for _ in range(30):
        n = 7
        C = rng.integers(0, 3, size=(n, n)).astype(float)
        a = np.full(n, 1 / n)
        b = np.zeros(n)
        b[rng.choice(n, 3, replace=False)] = 1 / 3
        b[0] += 1 - b.sum()
        assert exact_emd(a, b, C).cost == pytest.approx(lp_emd(a, b, C), abs=1e-12)


def test_emd_certificate(rng):
    a, b, C = random_instance(rng, 10)
    r = exact_emd(a, b, C)
    red = C - r.row_potentials[:, None] - r.col_potentials[None, :]
    assert red.min() >= -1e-12
    assert np.all(np.abs(red[r.plan > 0]) < 1e-12)
    assert np.allclose(r.plan.sum(1), a) and np.allclose(r.plan.sum(0), b)
    assert r.cost == pytest.approx(r.row_potentials @ a + r.col_potentials @ b, abs=1e-12)


def test_emd_size_limit(rng):
    a, b, C = random_instance(rng, 65)
    with pytest.raises(UnsupportedSizeError):
        exact_emd(a, b, C)
    # sparse supports are fine even on a large lattice
    n = 128
    C = generate_anchors(n).cost
    U = np.zeros(n)
    U[[3, 50]] = [0.25, 0.75]
    assert exact_emd(U, delta(n, 9), C).cost == pytest.approx(0.25 * C[3, 9] + 0.75 * C[50, 9])


# -- Sinkhorn -----------------------------------------------------------------


def test_sinkhorn_delta_to_itself(rng):
    C = random_cost(rng, 6)
    tp = sinkhorn(delta(6, 2), delta(6, 2), C)
    assert tp.plan[2, 2] == pytest.approx(1.0, abs=1e-15)
    assert tp.plan.sum() == pytest.approx(1.0)
    assert sml(delta(6, 2), delta(6, 2), C).transport_cost == 0.0


def test_sinkhorn_delta_to_delta(rng):
    C = random_cost(rng, 6)
    tp = sinkhorn(delta(6, 0), delta(6, 5), C)
    assert tp.plan[0, 5] == pytest.approx(1.0, abs=1e-15)
    assert np.count_nonzero(tp.plan) == 1
    assert sml(delta(6, 0), delta(6, 5), C).transport_cost == pytest.approx(C[0, 5])


@pytest.mark.parametrize("n", [6, 8])
def test_sinkhorn_close_to_exact(rng, n):
    for _ in range(20):
        U, V, C = random_instance(rng, n)
        r = sml(U, V, C)
        assert r.converged
        assert abs(r.transport_cost - exact_emd(U, V, C).cost) <= 1e-3


def test_marginals_feasible(rng):
    for _ in range(30):
        U, V, C = random_instance(rng, 8)
        tp = sinkhorn(U, V, C)
        assert tp.converged
        assert np.abs(tp.plan.sum(1) - U).sum() <= 1e-9
        assert np.abs(tp.plan.sum(0) - V).sum() <= 1e-9
        assert tp.plan.min() >= 0


def test_zero_weights_stay_zero(rng):
    U, V, C = random_instance(rng, 8)
    U[[1, 4]] = 0
    U /= U.sum()
    V[6] = 0
    V /= V.sum()
    tp = sinkhorn(U, V, C)
    assert np.all(tp.plan[[1, 4]] == 0) and np.all(tp.plan[:, 6] == 0)
    assert np.all(np.isfinite(tp.dual_u)) and np.all(np.isfinite(tp.dual_v))
    assert tp.converged


def test_tiny_weights_stay_finite(rng):
    for _ in range(10):
        U, V, C = random_instance(rng, 8)
        U[:3] = 1e-12
        U /= U.sum()
        V[-2:] = 1e-12
        V /= V.sum()
        for eps in (1e-2, 1e-3, 1e-4):
            tp = sinkhorn(U, V, C, SinkhornConfig(epsilon=eps))
            assert np.all(np.isfinite(tp.plan)) and np.all(np.isfinite(tp.dual_u))
            assert tp.converged


def test_symmetric_in_arguments(rng):
    for _ in range(10):
        U, V, C = random_instance(rng, 7)
        assert sml(U, V, C).transport_cost == pytest.approx(sml(V, U, C).transport_cost, abs=1e-9)


def test_uniform_self_distance_shrinks_with_eps():
    C = generate_anchors(16).cost
    u = np.full(16, 1 / 16)
    costs = [sml(u, u, C, SinkhornConfig(epsilon=e)).transport_cost for e in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert costs[0] > 0
    assert costs[-1] < 1e-12


def test_regularized_objective_definition(rng):
    U, V, C = random_instance(rng, 6)
    cfg = SinkhornConfig(epsilon=1e-2)
    r = sml(U, V, C, cfg)
    T = r.plan.plan
    assert r.transport_cost == pytest.approx((C * T).sum(), abs=1e-15)
    H = -np.sum(T[T > 0] * np.log(T[T > 0]))
    assert r.regularized_objective == pytest.approx(r.transport_cost - 1e-2 * H, abs=1e-14)
    assert entropy(np.array([[0.5, 0.0], [0.0, 0.5]])) == pytest.approx(math.log(2))


def test_plain_sinkhorn_reaches_the_same_plan(rng):
    U, V, C = random_instance(rng, 6)
    plain = sinkhorn(U, V, C, SinkhornConfig(epsilon=1e-2, newton=False, epsilon_scaling=False))
    fast = sinkhorn(U, V, C, SinkhornConfig(epsilon=1e-2))
    assert plain.converged and fast.converged
    assert np.abs(plain.plan - fast.plan).max() < 1e-8


def test_fixed_point_of_log_domain_updates(rng):
    # the returned potentials satisfy the Sinkhorn equations
    U, V, C = random_instance(rng, 8)
    eps = 1e-3
    tp = sinkhorn(U, V, C, SinkhornConfig(epsilon=eps))
    K = (tp.dual_u[:, None] + tp.dual_v[None, :] - C) / eps
    assert np.allclose(np.exp(K), tp.plan, rtol=1e-12, atol=0)


def test_non_convergence_is_reported_not_raised(rng):
    U, V, C = random_instance(rng, 8)
    tp = sinkhorn(U, V, C, SinkhornConfig(max_iterations=1, newton=False, epsilon_scaling=False))
    assert tp.iterations == 1
    assert not tp.converged and tp.marginal_error > 1e-9


def test_input_validation(rng):
    U, V, C = random_instance(rng, 5)
    with pytest.raises(ValueError):
        sinkhorn(U, V[:4] / V[:4].sum(), C)
    with pytest.raises(ValueError):
        sinkhorn(U * 2, V, C)
    with pytest.raises(ValueError):
        SinkhornConfig(epsilon=0)
    with pytest.raises(ValueError):
        SinkhornConfig(tolerance=-1)


def test_deterministic(rng):
    U, V, C = random_instance(rng, 8)
    assert sinkhorn(U, V, C).plan.tobytes() == sinkhorn(U, V, C).plan.tobytes()


# -- gradient -----------------------------------------------------------------


def _fd_gradient(U, V, C, h=1e-5):
    tight = SinkhornConfig(tolerance=1e-11)
    n = U.size
    out = np.empty(n)
    for i in range(n):
        d = np.full(n, -1.0 / n)
        d[i] += 1.0
        hi = sml(U + h * d, V, C, tight).regularized_objective
        lo = sml(U - h * d, V, C, tight).regularized_objective
        out[i] = (hi - lo) / (2 * h)
    return out


def test_gradient_matches_finite_differences(rng):
    for _ in range(10):
        U, V, C = random_instance(rng, 8)
        g = sml_gradient(U, V, C)
        assert g.reliable
        fd = _fd_gradient(U, V, C)
        assert np.linalg.norm(g.gradient - fd) <= 1e-4 * np.linalg.norm(fd)
        assert abs(g.gradient.sum()) <= 1e-9


def test_gradient_at_equal_distributions(rng):
    C = random_cost(rng, 8)
    u = np.full(8, 1 / 8)
    assert np.abs(sml_gradient(u, u, C).gradient).max() <= 1e-4
    # off the uniform point the potentials are (eps/2) log U up to a shift
    U = rng.dirichlet(np.full(8, 5.0))
    g = sml_gradient(U, U, C).gradient
    expect = 0.5e-4 * (np.log(U) - np.log(U).mean())
    assert np.allclose(g, expect, atol=1e-9)


def test_gradient_flags_unconverged(rng):
    U, V, C = random_instance(rng, 8)
    g = sml_gradient(U, V, C, SinkhornConfig(max_iterations=2, newton=False))
    assert not g.reliable


# -- RGB aggregate -------------------------------------------------------------


def _params(rng, n, intensity=(1, 1, 1)):
    return IlluminationParams(rng.dirichlet(np.ones(n), size=3), intensity, [0, 0, 0])


def test_sml_rgb_identity_and_intensity_blindness(rng):
    C = generate_anchors(10).cost
    p = _params(rng, 10)
    assert sml_rgb(p, p, C) == pytest.approx(0.0, abs=1e-9)
    q = _params(rng, 10)
    brighter = IlluminationParams(q.distribution, [5, 6, 7], [1, 1, 1])
    assert sml_rgb(p, q, C) == sml_rgb(p, brighter, C)


def test_sml_rgb_is_channel_sensitive(rng):
    C = generate_anchors(10).cost
    n = 10
    dist = np.stack([delta(n, 0), delta(n, 5), delta(n, 9)])
    p = IlluminationParams(dist, [1, 1, 1], [0, 0, 0])
    swapped = IlluminationParams(dist[[1, 0, 2]], [1, 1, 1], [0, 0, 0])
    target = IlluminationParams(np.stack([delta(n, 1), delta(n, 5), delta(n, 9)]), [1, 1, 1], [0, 0, 0])
    assert sml_rgb(p, target, C) != pytest.approx(sml_rgb(swapped, target, C))
    assert sml_rgb(p, target, C) == pytest.approx(C[0, 1] / 3, abs=1e-12)


def test_sml_rgb_mismatched_n(rng):
    with pytest.raises(ValueError):
        sml_rgb(_params(rng, 4), _params(rng, 5), generate_anchors(4).cost)
