"""Away-step Frank-Wolfe solvers and the precision-safe line search."""

import numpy as np
import pytest

from subproj import (
    Chain,
    SolverOptions,
    a2fw_project,
    afw_project,
    get_map,
    line_search,
    membership,
    pav_project,
    permutahedron,
    substream,
)

from conftest import gaussian_point, random_cardinality


def test_line_search_examples():
    euclid = get_map("euclid")
    y = np.array([1.0, 0.0])
    x = np.array([0.0, 0.0])
    assert line_search(euclid, y, x, np.array([1.0, 0.0]), 1.0) == pytest.approx(1.0)
    assert line_search(euclid, y, x, np.array([2.0, 0.0]), 1.0) == pytest.approx(0.5)
    # boundary rule: optimum past gamma_max snaps to gamma_max
    assert line_search(euclid, np.array([3.0, 0.0]), x, np.array([1.0, 0.0]), 1.0) \
        == pytest.approx(1.0)
    with pytest.raises(ValueError):
        line_search(euclid, y, x, np.array([-1.0, 0.0]), 1.0)  # ascent direction


def test_line_search_general_map_matches_euclid_shape():
    """KL line search lands on the minimizer of the 1-d restriction."""
    kl = get_map("kl")
    y = np.array([2.0, 1.0])
    x = np.array([1.0, 2.0])
    d = np.array([0.5, -0.5])
    gamma = line_search(kl, y, x, d, 1.0)
    from subproj import bregman
    vals = [bregman(kl, x + t * d, y) for t in np.linspace(0, 1, 201)]
    assert bregman(kl, x + gamma * d, y) <= min(vals) + 1e-8


def test_afw_segment_example():
    res = afw_project(permutahedron(2), "euclid", np.array([5.0, 0.0]),
                      SolverOptions(eps=1e-7))
    assert np.allclose(res.x, [2.0, 1.0], atol=1e-6)
    assert res.iterations <= 3


def test_afw_immediate_exit_on_huge_eps():
    res = afw_project(permutahedron(3), "euclid", np.array([1.0, 2.0, 3.0]),
                      SolverOptions(eps=np.inf))
    assert res.iterations == 0
    assert sorted(res.x) == [1, 2, 3]  # a vertex


def test_afw_matches_pav_euclid():
    rng = substream(31, "fw")
    for _ in range(15):
        n = int(rng.integers(2, 11))
        f = random_cardinality(n, rng)
        y = gaussian_point(n, rng)
        res = afw_project(f, "euclid", y, SolverOptions(eps=1e-9))
        xs = pav_project(f, "euclid", y).x
        assert np.linalg.norm(res.x - xs) <= 1e-4
        assert membership(f, res.x, tol=1e-7)
        assert res.fw_gap <= 1e-9 or res.exact


def test_afw_active_set_reconstructs_iterate():
    rng = substream(32, "fw")
    f = permutahedron(6)
    y = gaussian_point(6, rng)
    res = afw_project(f, "euclid", y, SolverOptions(eps=1e-8))
    if res.active is not None:
        lam = np.asarray(res.active.weights)
        assert np.all(lam > 0) and np.sum(lam) == pytest.approx(1.0, abs=1e-10)
        recon = sum(w * v for w, v in zip(res.active.weights, res.active.vertices))
        assert np.allclose(recon, res.x, atol=1e-8)


def test_a2fw_warm_chain_exact_at_iteration_zero():
    res = a2fw_project(permutahedron(2), "euclid", np.array([5.0, 0.0]),
                       warm_chain=Chain([{0}]))
    assert res.exact
    assert np.allclose(res.x, [2.0, 1.0], atol=1e-12)
    assert res.iterations == 0


def test_a2fw_cold_exact_on_example():
    res = a2fw_project(permutahedron(3), "euclid", np.array([10.0, 0.0, 0.1]))
    assert res.exact
    assert np.allclose(res.x, [3.0, 1.45, 1.55], atol=1e-10)
    assert res.chain.with_ground_set(3).sets == (frozenset({0}), frozenset({0, 1, 2}))


def test_a2fw_matches_pav_continuous_and_integral():
    rng = substream(33, "fw")
    exact = 0
    for trial in range(20):
        n = int(rng.integers(3, 13))
        integral = trial % 2 == 0
        f = random_cardinality(n, rng, integral=integral)
        y = (rng.integers(-2 * n, 2 * n, n).astype(float) if integral
             else gaussian_point(n, rng))
        res = a2fw_project(f, "euclid", y, opts=SolverOptions(eps=1e-7))
        xs = pav_project(f, "euclid", y).x
        assert np.linalg.norm(res.x - xs) <= 1e-5
        exact += res.exact
    assert exact >= 15  # relax/round exits fire on most instances


def test_a2fw_kl_matches_pav():
    rng = substream(34, "fw")
    for _ in range(8):
        n = int(rng.integers(3, 9))
        f = random_cardinality(n, rng)
        if f.g[1] <= 0.1:
            continue
        y = np.abs(gaussian_point(n, rng)) + 0.2
        res = a2fw_project(f, "kl", y, opts=SolverOptions(eps=1e-9))
        xs = pav_project(f, "kl", y).x
        assert np.linalg.norm(res.x - xs) <= 1e-4


def test_a2fw_exact_exits_have_tight_chain():
    rng = substream(35, "fw")
    for _ in range(10):
        n = int(rng.integers(3, 10))
        f = random_cardinality(n, rng, integral=True)
        y = rng.integers(-n, n, n).astype(float)
        res = a2fw_project(f, "euclid", y)
        if not res.exact:
            continue
        assert res.active is None
        for S in res.chain.with_ground_set(n):
            assert float(np.sum(res.x[sorted(S)])) == pytest.approx(f.value(S), abs=1e-8)


def test_a2fw_tools_off_reduces_to_afw():
    rng = substream(36, "fw")
    f = permutahedron(7)
    y = gaussian_point(7, rng)
    opts = SolverOptions(eps=1e-8, tools=frozenset())
    ra = a2fw_project(f, "euclid", y, opts=opts)
    rb = afw_project(f, "euclid", y, SolverOptions(eps=1e-8))
    assert np.allclose(ra.x, rb.x, atol=1e-6)
    assert not ra.exact  # no exact-exit tools enabled


def test_a2fw_iteration_advantage_with_warm_start():
    """Warm-started adaptive runs use no more LO calls than vanilla."""
    rng = substream(37, "fw")
    f = permutahedron(10)
    y = gaussian_point(10, rng)
    base = pav_project(f, "euclid", y)
    ytilde = y + 1e-3 * rng.normal(0, 1, 10)
    from subproj import infer_from_previous
    warm = infer_from_previous(base.x, y, ytilde,
                               eps=float(np.linalg.norm(ytilde - y))).chain
    cold = afw_project(f, "euclid", ytilde, SolverOptions(eps=1e-7))
    warmres = a2fw_project(f, "euclid", ytilde, warm_chain=warm,
                           opts=SolverOptions(eps=1e-7))
    assert warmres.iterations <= cold.iterations
    xs = pav_project(f, "euclid", ytilde).x
    assert np.linalg.norm(warmres.x - xs) <= 1e-5
