import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from gaugeflow.grid import at_origin, integrate, l2_norm, laplacian, make_grid, partial, tree_sum


def gauss(g):
    return np.exp(-g.r2)


def test_make_grid_spacing_and_nodes():
    g = make_grid(8, 256, "dirichlet_zero")
    assert g.h == 0.0625
    x1, x2 = g.coords
    assert x1[0, 0] == -8 + 0.5 * g.h
    assert np.allclose(x1[:, 0], -x1[::-1, 0])
    # the origin falls between the four centre nodes
    assert abs(x1[127, 0] + x1[128, 0]) < 1e-15


@pytest.mark.parametrize("L,N", [(8, 7), (8, 6), (8, 9), (-1, 16), (0, 16)])
def test_make_grid_rejects_bad_input(L, N):
    with pytest.raises(ValueError):
        make_grid(L, N)


def test_make_grid_error_message():
    with pytest.raises(ValueError, match="N must be even and ≥ 8"):
        make_grid(8, 7)


def test_make_grid_rejects_unknown_boundary():
    with pytest.raises(ValueError):
        make_grid(8, 16, "reflecting")


@pytest.mark.parametrize("boundary", ["dirichlet_zero", "periodic", "open"])
def test_partial_of_constant_is_zero_in_interior(boundary):
    g = make_grid(4, 32, boundary)
    d = partial(np.ones(g.shape), g, 1)
    if boundary == "dirichlet_zero":
        d = d[1:-1]
    assert np.abs(d).max() < 1e-12


def test_partial_gaussian_near_unit_point():
    errs = []
    for n in (64, 128, 256):
        g = make_grid(4, n, "dirichlet_zero")
        x1, x2 = g.coords
        i = np.argmin(np.abs(x1[:, 0] - 1.0))
        j = np.argmin(np.abs(x2[0]))
        exact = -2 * x1[i, j] * np.exp(-(x1[i, j] ** 2 + x2[i, j] ** 2))
        errs.append(abs(partial(gauss(g), g, 1)[i, j] - exact))
    # the sample point is within h/2 of (1, 0), where the derivative is -2/e
    g = make_grid(4, 256)
    x1, x2 = g.coords
    i = np.argmin(np.abs(x1[:, 0] - 1.0))
    assert abs(partial(gauss(g), g, 1)[i, 128] - (-2 / np.e)) < 0.02
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_partial_linear_function_in_x2():
    g = make_grid(4, 32, "periodic")
    d = partial(g.coords[1], g, 2)
    assert np.allclose(d[:, 2:-2], 1.0, atol=1e-12)


def test_open_boundary_is_exact_on_polynomials():
    g = make_grid(3, 16, "open")
    x1, x2 = g.coords
    f = x1**2 - 2 * x1 * x2 + x2
    assert np.allclose(partial(f, g, 1), 2 * x1 - 2 * x2, atol=1e-10)
    assert np.allclose(partial(f, g, 2), -2 * x1 + 1, atol=1e-10)
    c = x1**3 - x2**3
    assert np.allclose(partial(c, g, 1, order=4), 3 * x1**2, atol=1e-9)


def test_order4_converges_faster():
    errs = {2: [], 4: []}
    for n in (32, 64):
        g = make_grid(4, n, "dirichlet_zero")
        exact = -2 * g.coords[0] * gauss(g)
        for o in errs:
            errs[o].append(np.abs(partial(gauss(g), g, 1, o) - exact).max())
    assert errs[4][0] / errs[4][1] > 12
    assert errs[2][0] / errs[2][1] > 3.5


def test_laplacian_of_quadratic_is_four():
    g = make_grid(4, 32, "periodic")
    lap = laplacian(g.r2, g)
    assert np.allclose(lap[2:-2, 2:-2], 4.0, atol=1e-9)


def test_laplacian_gaussian_at_origin():
    g = make_grid(4, 256, "dirichlet_zero")
    exact = (4 * g.r2 - 4) * gauss(g)
    lap = laplacian(gauss(g), g)
    assert abs(at_origin(lap) - at_origin(exact)) < 4 * g.h**2
    assert abs(at_origin(lap) + 4) < 8 * g.h**2


def test_integrate_zero_and_gaussian():
    g = make_grid(8, 256)
    assert integrate(np.zeros(g.shape), g) == 0.0
    assert abs(integrate(gauss(g), g) - np.pi) < 1e-6


def test_integrate_soliton_density_on_square():
    # oracle: the same integrand over the square [-8, 8]^2 by adaptive quadrature
    oracle, _ = sp_integrate.dblquad(lambda y, x: 4 / (1 + x * x + y * y) ** 2, -8, 8, -8, 8)
    g = make_grid(8, 256)
    val = integrate(4 / (1 + g.r2) ** 2, g)
    assert abs(val - oracle) < 0.02
    assert abs(oracle - 12.4078) < 1e-3


def test_tree_sum_is_deterministic_and_batched():
    a = np.random.default_rng(0).normal(size=(3, 37, 29))
    s = tree_sum(a)
    assert s.shape == (3,)
    assert np.array_equal(s, tree_sum(a.copy()))
    assert np.allclose(s, a.sum(axis=(1, 2)))
    assert tree_sum(a[0]) == s[0]


def test_l2_norm_matches_quadrature():
    g = make_grid(4, 32)
    f = (1 + 1j) * gauss(g)
    assert np.isclose(l2_norm(f, g) ** 2, integrate(np.abs(f) ** 2, g))


def test_at_origin_averages_centre_nodes():
    g = make_grid(4, 16)
    f = np.zeros(g.shape)
    f[7:9, 7:9] = [[1, 2], [3, 4]]
    assert at_origin(f) == 2.5


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 2**16),
       boundary=st.sampled_from(["dirichlet_zero", "periodic", "open"]), order=st.sampled_from([2, 4]))
def test_operators_are_linear(a, b, seed, boundary, order):
    g = make_grid(2, 16, boundary)
    rng = np.random.default_rng(seed)
    f, h = rng.normal(size=(2,) + g.shape)
    for op in (lambda x: partial(x, g, 1, order), lambda x: partial(x, g, 2, order),
               lambda x: laplacian(x, g, order)):
        lhs = op(a * f + b * h)
        rhs = a * op(f) + b * op(h)
        assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


@settings(max_examples=20, deadline=None)
@given(c=st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_order2_exact_on_quadratics_periodic_interior(c):
    g = make_grid(2, 16, "periodic")
    x1, x2 = g.coords
    f = c[0] + c[1] * x1 + c[2] * x2 + c[3] * x1 * x1 + c[4] * x1 * x2 + c[5] * x2 * x2
    inner = (slice(2, -2), slice(2, -2))
    assert np.allclose(partial(f, g, 1)[inner], (c[1] + 2 * c[3] * x1 + c[4] * x2)[inner], atol=1e-9)
    assert np.allclose(laplacian(f, g)[inner], 2 * c[3] + 2 * c[5], atol=1e-8)


def test_refinement_reduces_error_of_compact_field():
    errs = []
    for n in (32, 64, 128):
        g = make_grid(4, n, "periodic")
        f = np.exp(-2 * g.r2)
        exact = -4 * g.coords[1] * f
        errs.append(np.abs(partial(f, g, 2) - exact).max())
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5
