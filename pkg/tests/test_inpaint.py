import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdeinpaint.inpaint import (
    InpaintingSystem,
    Reconstructor,
    SolverConfig,
    SolverError,
    inpainting_echo,
    inpainting_matrix,
    solve_eed_inpainting,
    solve_linear_inpainting,
)
from pdeinpaint.operators import EedParams, assemble_biharmonic, assemble_laplacian


def _random_instance(seed, h, w, p=0.2):
    rng = np.random.default_rng(seed)
    f = rng.uniform(0, 255, (h, w))
    mask = rng.uniform(size=(h, w)) < p
    mask[rng.integers(h), rng.integers(w)] = True
    return f, mask


def _residual_ok(mask, op, u, g, tol):
    m = inpainting_matrix(mask, op)
    rhs = np.where(mask.ravel(), np.asarray(g).ravel(), 0.0)
    return np.linalg.norm(m @ u.ravel() - rhs) <= tol * np.linalg.norm(rhs)


def test_matrix_structure():
    mask = np.array([[True, False, False]])
    m = inpainting_matrix(mask, assemble_laplacian(3, 1)).toarray()
    assert m.tolist() == [[1, 0, 0], [-1, 2, -1], [0, -1, 1]]


def test_full_mask_returns_f():
    f = np.random.default_rng(0).uniform(0, 255, (5, 6))
    u = solve_linear_inpainting(np.ones_like(f, bool), f, assemble_laplacian(6, 5))
    assert np.array_equal(u, f)


def test_two_point_1d_is_linear():
    mask = np.array([[1, 0, 0, 0, 1]], bool)
    f = np.array([[0.0, 9.0, 9.0, 9.0, 4.0]])
    u = solve_linear_inpainting(mask, f, assemble_laplacian(5, 1))
    assert np.allclose(u, [[0, 1, 2, 3, 4]], atol=1e-12)


def test_mask_pixels_exact():
    f, mask = _random_instance(1, 9, 7)
    u = solve_linear_inpainting(mask, f, assemble_biharmonic(7, 9))
    assert np.array_equal(u[mask], f[mask])


def test_empty_mask_rejected():
    with pytest.raises(ValueError, match="empty mask"):
        solve_linear_inpainting(np.zeros((3, 3), bool), np.zeros((3, 3)), assemble_laplacian(3, 3))


def test_operator_size_mismatch():
    with pytest.raises(ValueError):
        inpainting_matrix(np.ones((2, 2), bool), assemble_laplacian(3, 3))


@given(st.integers(0, 10_000), st.integers(1, 12), st.integers(1, 12))
def test_homogeneous_max_min_principle(seed, h, w):
    f, mask = _random_instance(seed, h, w)
    u = solve_linear_inpainting(mask, f, assemble_laplacian(w, h))
    lo, hi = f[mask].min(), f[mask].max()
    assert u.min() >= lo - 1e-9 and u.max() <= hi + 1e-9


@given(st.integers(0, 10_000), st.integers(2, 12), st.integers(2, 12), st.sampled_from(["l", "b"]))
def test_residual_contract(seed, h, w, kind):
    f, mask = _random_instance(seed, h, w)
    op = assemble_laplacian(w, h) if kind == "l" else assemble_biharmonic(w, h)
    cfg = SolverConfig()
    u = solve_linear_inpainting(mask, f, op, cfg)
    assert _residual_ok(mask, op, u, f, cfg.rel_residual_tol)


def test_biharmonic_can_overshoot():
    # a step sampled at two points on each side rings past the data range
    f = np.array([[0, 0, 0, 0, 0, 0, 10, 10, 10, 10, 10, 10.0]])
    mask = np.zeros_like(f, bool)
    mask[0, [0, 4, 7, 11]] = True
    u = solve_linear_inpainting(mask, f, assemble_biharmonic(12, 1))
    assert u.min() < 0 or u.max() > 10


def test_iterative_path_on_large_grid():
    h = w = 130
    f, mask = _random_instance(4, h, w, p=0.05)
    cfg = SolverConfig(rel_residual_tol=1e-8)
    system = InpaintingSystem(mask, assemble_laplacian(w, h), cfg)
    assert system._lu is None
    u = system.reconstruct(f)
    assert _residual_ok(mask, assemble_laplacian(w, h), u, f, 1e-8)


def test_unreachable_tolerance_raises():
    f, mask = _random_instance(5, 6, 6)
    with pytest.raises(SolverError):
        solve_linear_inpainting(mask, f, assemble_biharmonic(6, 6), SolverConfig(rel_residual_tol=1e-300))


def test_echo_full_mask_is_unit_vector():
    mask = np.ones((3, 4), bool)
    e = inpainting_echo(mask, 5, assemble_laplacian(4, 3))
    expected = np.zeros(12)
    expected[5] = 1
    assert np.array_equal(e.ravel(), expected)


def test_echo_requires_mask_pixel():
    mask = np.zeros((3, 3), bool)
    mask[0, 0] = True
    with pytest.raises(ValueError):
        inpainting_echo(mask, 4, assemble_laplacian(3, 3))


@pytest.mark.parametrize("op_fn", [assemble_laplacian, assemble_biharmonic])
def test_echo_superposition(op_fn):
    f, mask = _random_instance(6, 8, 9, p=0.15)
    op = op_fn(9, 8)
    system = InpaintingSystem(mask, op)
    g = np.where(mask, np.random.default_rng(7).normal(0, 50, mask.shape), 0.0)
    total = sum(g.ravel()[i] * system.echo(i) for i in np.flatnonzero(mask))
    assert np.allclose(total, solve_linear_inpainting(mask, g, op), atol=1e-8)


def test_echoes_are_linearly_independent():
    mask = np.array([[1, 0, 1], [0, 1, 0], [1, 0, 0]], bool)
    op = assemble_laplacian(3, 3)
    b = np.column_stack([inpainting_echo(mask, i, op).ravel() for i in np.flatnonzero(mask)])
    assert np.linalg.matrix_rank(b) == mask.sum()


def test_eed_constant_image():
    f = np.full((8, 8), 77.0)
    _, mask = _random_instance(8, 8, 8)
    res = solve_eed_inpainting(mask, f)
    assert res.converged
    assert np.allclose(res.u, 77.0, atol=1e-9)


def test_eed_full_mask_one_iteration():
    f = np.random.default_rng(9).uniform(0, 255, (6, 6))
    res = solve_eed_inpainting(np.ones_like(f, bool), f)
    assert res.iterations == 1 and res.converged
    assert np.array_equal(res.u, f)


@pytest.mark.parametrize("stencil", ["split", "central"])
def test_eed_large_lambda_matches_homogeneous(stencil):
    f, mask = _random_instance(10, 12, 12)
    u_eed = solve_eed_inpainting(mask, f, EedParams(lam=1e9, stencil=stencil)).u
    u_hom = solve_linear_inpainting(mask, f, assemble_laplacian(12, 12))
    assert np.abs(u_eed - u_hom).max() <= 1e-4


def test_eed_empty_mask():
    with pytest.raises(ValueError):
        solve_eed_inpainting(np.zeros((3, 3), bool), np.zeros((3, 3)))


def test_eed_iteration_cap_reports_nonconvergence():
    f, mask = _random_instance(11, 10, 10)
    cfg = SolverConfig(eed_fixed_point_tol=1e-14, eed_max_fixed_point_iters=2)
    res = solve_eed_inpainting(mask, f, cfg=cfg)
    assert not res.converged and res.iterations == 2


def test_eed_relaxation_reaches_same_fixed_point():
    f, mask = _random_instance(12, 10, 10, p=0.3)
    plain = solve_eed_inpainting(mask, f, EedParams(lam=5.0), SolverConfig(eed_fixed_point_tol=1e-9, eed_max_fixed_point_iters=400))
    damped = solve_eed_inpainting(
        mask, f, EedParams(lam=5.0),
        SolverConfig(eed_fixed_point_tol=1e-9, eed_max_fixed_point_iters=400, eed_relaxation=0.7),
    )
    assert plain.converged and damped.converged
    assert np.abs(plain.u - damped.u).max() < 1e-6


def test_eed_warm_start_accepts_flat_vector():
    f, mask = _random_instance(13, 6, 7)
    u0 = solve_linear_inpainting(mask, f, assemble_laplacian(7, 6)).ravel()
    res = solve_eed_inpainting(mask, f, u0=u0)
    assert res.u.shape == f.shape


def test_reconstructor_dispatch():
    f, mask = _random_instance(14, 6, 6)
    rec = Reconstructor(f.shape, "biharmonic")
    assert rec.linear
    assert np.allclose(rec(mask, f), solve_linear_inpainting(mask, f, assemble_biharmonic(6, 6)))
    eed = Reconstructor(f.shape, "eed")
    assert not eed.linear
    with pytest.raises(TypeError):
        eed.system(mask)
    assert eed(mask, f).shape == f.shape
    assert rec.solves == 1 and eed.solves == 1
    with pytest.raises(ValueError):
        Reconstructor(f.shape, "tv")


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(rel_residual_tol=0)
    with pytest.raises(ValueError):
        SolverConfig(max_linear_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(eed_relaxation=1.5)
