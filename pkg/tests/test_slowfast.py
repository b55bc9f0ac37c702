import json
from fractions import Fraction

import numpy as np
import pytest

from crninherit.corpus import load_system
from crninherit.dynamics import dopri
from crninherit.slowfast import (
    A_EPS,
    A_ZERO,
    B_EPS,
    B_ZERO,
    DomainError,
    OrbitTube,
    critical_manifold,
    decompose,
    enlarged_system,
    epsilon_bound,
    from_slow_fast,
    layer_jacobian,
    lifted_initial_condition,
    manifold_batch,
    phi_inverse,
    phi_map,
    psi_inverse,
    psi_map,
    system_rhs,
    to_slow_fast,
)
from support import split_record, system_with_rates


def ints(m):
    return [[Fraction(v) for v in m.row(i)] for i in range(m.nrows)]


@pytest.fixture(scope="module")
def r2_model():
    return decompose(split_record("R1", "r1_to_r2.json")), load_system("R1")


@pytest.fixture(scope="module")
def r4_model():
    return decompose(split_record("R3", "r3_to_r4.json")), load_system("R3")


def test_r2_decomposition(r2_model):
    sfm, _ = r2_model
    assert sfm.rows == (0, 1) and sfm.other_rows == (2,)
    assert ints(sfm.beta_hat) == [[2, 0], [0, 1]]
    assert ints(sfm.doublehat_beta) == [[0, 1]]
    assert ints(sfm.delta) == [[0], [-1]]
    assert ints(sfm.gamma) == [[0, 0, Fraction(-1, 2)], [0, 0, 0]]
    assert ints(sfm.v_exponent) == [[Fraction(1, 2), 0], [0, 1]]
    assert ints(sfm.alpha_beta_hat_inv) == [[0, 0], [-1, 0], [Fraction(1, 2), 0]]
    assert sfm.sigma() == (2, 1)
    # the conserved combination on the new species is W - V (up to sign)
    w = sfm.conserved_weights()
    assert w[3] == 0 and w[4] == -w[5] != 0
    json.loads(sfm.to_json())


def test_r4_decomposition(r4_model):
    sfm, _ = r4_model
    assert ints(sfm.beta_hat) == [[1]] and sfm.k == 0
    assert sfm.delta.shape == (1, 0)
    assert ints(sfm.gamma) == [[0, 0, 0]]


def test_erk_split_decomposition():
    sfm = decompose(split_record("erk_reduced", "erk.json"))
    assert ints(sfm.beta_hat) == [[1, 0], [0, 1]] and sfm.k == 0


def test_decompose_rejects_other_records():
    from crninherit.corpus import load_network
    from crninherit.enlarge import fully_open
    with pytest.raises(ValueError):
        decompose(fully_open(load_network("R1")[0]))


# -- coordinates -------------------------------------------------------------

def test_phi_on_r2(r2_model):
    sfm, _ = r2_model
    x = np.array([1.0, 2.0, 3.0])
    u, v = 0.4, 0.3
    z, yh = phi_map(sfm, x, [u, v, 1 + v])
    assert np.allclose(z, [1.0, 2.0 + u, 3.0 - u / 2], rtol=0, atol=1e-15)
    assert np.allclose(yh, [u, v])
    z0, yh0 = phi_map(sfm, x, [0.0, 0.0, 1.0])
    assert np.array_equal(z0, x)
    xx, y = phi_inverse(sfm, x, [0.0, 0.0])
    assert np.array_equal(y, [0.0, 0.0, 1.0])
    with pytest.raises(DomainError):
        phi_map(sfm, x, [u, v, 1.5 + v])


def test_phi_round_trip(r2_model):
    sfm, _ = r2_model
    rng = np.random.default_rng(0)
    for _ in range(100):
        z = rng.uniform(0.1, 3, 3)
        yh = rng.uniform(0, 1, 2)
        x, y = phi_inverse(sfm, z, yh)
        z2, yh2 = phi_map(sfm, x, y)
        assert np.max(np.abs(z2 - z)) < 1e-12 and np.max(np.abs(yh2 - yh)) < 1e-12


def test_psi_examples():
    z, w = psi_map([1.0], [0.2, 0.05], 0.1)
    assert np.allclose(w, [2.0, 0.5])
    assert np.allclose(psi_inverse(z, w, 0.1)[1], [0.2, 0.05])
    assert np.array_equal(psi_map([1.0], [0.3], 1.0)[1], [0.3])
    with pytest.raises(ValueError):
        psi_map([1.0], [0.3], 0.0)


# -- vector fields and manifold ----------------------------------------------

def test_variants_are_consistent(r2_model):
    sfm, base = r2_model
    z, w, eps = np.array([1.0, 1.5, 0.8]), np.array([0.7, 0.3]), 0.05
    dz, dw = system_rhs(sfm, base, A_EPS, z, w, eps)
    fz, fw = system_rhs(sfm, base, B_EPS, z, w, eps)
    assert np.allclose(fz, eps * dz) and np.allclose(fw, eps * dw)
    slow, res = system_rhs(sfm, base, A_ZERO, z, w)
    zero, res2 = system_rhs(sfm, base, B_ZERO, z, w)
    assert np.allclose(slow, base.rhs(z)) and np.all(zero == 0) and np.array_equal(res, res2)
    with pytest.raises(DomainError):
        system_rhs(sfm, base, A_EPS, np.array([1.0, 0.01, 1.0]), np.array([5.0, 0.1]), 0.1)
    with pytest.raises(ValueError):
        system_rhs(sfm, base, "C", z, w)


def test_manifold_zeroes_the_layer(r2_model):
    sfm, base = r2_model
    rng = np.random.default_rng(1)
    pts = rng.uniform(0.1, 4.0, (100, 3))
    batch = manifold_batch(sfm, base, pts)
    for z, wb in zip(pts, batch):
        w = critical_manifold(sfm, base, z)
        assert np.allclose(w, wb, rtol=1e-13)
        _, res = system_rhs(sfm, base, B_ZERO, z, w)
        assert np.max(np.abs(res)) <= 1e-12 * max(1.0, np.max(w) ** 2)


def test_simple_intermediate_manifold(r4_model):
    sfm, base = r4_model
    z = np.array([0.7, 1.3, 0.4])
    assert critical_manifold(sfm, base, z)[0] == pytest.approx(base.rates(z)[1])
    # m = 1, beta_hat = 1: the layer Jacobian is -v(z)/w = -1 on the manifold
    w = critical_manifold(sfm, base, z)
    assert layer_jacobian(sfm, base, z, w)[0, 0] == pytest.approx(-1.0)
    assert layer_jacobian(sfm, base, z, 2 * w)[0, 0] == pytest.approx(-1.0)


def test_layer_jacobian_on_manifold_formula(r2_model):
    sfm, base = r2_model
    z = np.array([1.2, 0.8, 1.7])
    w = critical_manifold(sfm, base, z)
    bh = sfm.f["bh"]
    v = base.rates(z)[list(sfm.split_indices)]
    expected = -bh @ np.diag(v) @ bh.T @ np.diag(1 / w)
    assert np.allclose(layer_jacobian(sfm, base, z, w), expected, rtol=1e-12)


@pytest.mark.parametrize("base, script", [("R1", "r1_to_r2.json"), ("R3", "r3_to_r4.json"),
                                          ("erk_reduced", "erk.json")])
def test_layer_spectrum(base, script):
    sfm = decompose(split_record(base, script))
    sys = system_with_rates(base, seed=7)
    rng = np.random.default_rng(7)
    for _ in range(30):
        z = np.exp(rng.uniform(-1, 1, sfm.n))
        ev = np.linalg.eigvals(layer_jacobian(sfm, sys, z, critical_manifold(sfm, sys, z)))
        assert np.all(ev.real < 0) and np.all(np.abs(ev.imag) <= 1e-9 * np.abs(ev).max())


# -- lifted states -----------------------------------------------------------

def test_lifted_initial_condition_r2(r2_model, r1_orbit):
    sfm, base = r2_model
    z0 = r1_orbit[2].point
    state = lifted_initial_condition(sfm, base, z0, 0.1)
    assert state.shape == (6,) and np.all(state > 0)
    assert state[5] - state[4] == 1.0
    z, w = to_slow_fast(sfm, state, 0.1)
    assert np.allclose(z, z0, rtol=1e-13) and np.allclose(w, critical_manifold(sfm, base, z0), rtol=1e-13)
    tiny = lifted_initial_condition(sfm, base, z0, 1e-9)
    assert np.allclose(tiny[3:], [0, 0, 1], atol=1e-8)
    with pytest.raises(DomainError):
        lifted_initial_condition(sfm, base, np.array([1.0, 0.01, 1.0]), 0.5)


def test_coordinate_coherence(r2_model):
    """A_eps from (z0, w0) and the full system from the lifted state agree after one base period."""
    sfm, base = r2_model
    eps, T = 0.1, 12.0
    z0 = np.array([1.0, 1.0, 1.0])
    w0 = critical_manifold(sfm, base, z0)
    full = enlarged_system(sfm, base, eps)

    def slow_fast(u):
        dz, dw = system_rhs(sfm, base, A_EPS, u[:3], u[3:], eps)
        return np.concatenate([dz, dw])

    a = dopri(slow_fast, 0.0, np.concatenate([z0, w0]), T, rtol=1e-12, atol=1e-14).y
    b = dopri(full.rhs, 0.0, from_slow_fast(sfm, z0, w0, eps), T, rtol=1e-12, atol=1e-14).y
    z, w = to_slow_fast(sfm, b, eps)
    assert np.max(np.abs(np.concatenate([z, w]) - a)) < 1e-6


def test_enlarged_system_matches_fixture(r2_model):
    sfm, base = r2_model
    assert np.array_equal(enlarged_system(sfm, base, 0.1).rate_constants, load_system("R2", eps=0.1).rate_constants)


# -- eps bound ---------------------------------------------------------------

def test_point_tube_is_exact(r2_model):
    sfm, base = r2_model
    z = np.array([1.0, 1.2, 0.9])
    bound = epsilon_bound(sfm, base, OrbitTube([z], 0.0), 1.0)
    # no safety factor for a single point; log-space evaluation costs at most an ulp or two
    assert bound.K_O == pytest.approx(2 * np.linalg.norm(critical_manifold(sfm, base, z)), rel=1e-14)


def test_tube_bound_dominates_interior(r2_model, r1_orbit):
    sfm, base = r2_model
    centers = r1_orbit[2].samples[::50]
    tube = OrbitTube(centers, 0.15)
    bound = epsilon_bound(sfm, base, tube, 1.0)
    assert 0 < bound.eps1 <= 1.0 and "hyperplane" in bound.terms
    rng = np.random.default_rng(3)
    pts = centers[rng.integers(0, len(centers), 5000)] + rng.uniform(-0.15, 0.15, (5000, 3))
    sup = np.max(np.linalg.norm(manifold_batch(sfm, base, pts), axis=1))
    assert 2 * sup <= bound.K_O
    assert bound.admits(bound.eps1 / 2) and not bound.admits(bound.eps1)


def test_no_hyperplane_term_without_extra_species(r4_model):
    sfm, base = r4_model
    bound = epsilon_bound(sfm, base, OrbitTube([[1.0, 1 / 3, 2 / 3]], 0.1), 1.0)
    assert "hyperplane" not in bound.terms


def test_tube_touching_boundary_is_rejected(r2_model):
    sfm, base = r2_model
    with pytest.raises(DomainError):
        epsilon_bound(sfm, base, OrbitTube([[0.1, 1.0, 1.0]], 0.2), 1.0)
    assert not OrbitTube([[1.0, 1.0]], 0.1).disjoint_from(OrbitTube([[1.15, 1.0]], 0.1))
    assert OrbitTube([[1.0, 1.0]], 0.1).disjoint_from(OrbitTube([[1.25, 1.0]], 0.1))
