"""Grid/transform/norm substrate checks: exact single-mode identities, analytic
integrals, and the roundtrip/idempotence properties everything else leans on."""

import math

import numpy as np
import pytest

from prnls.errors import SymmetryError
from prnls.spectral import (Field, Grid, SpectralField, apply_multiplier,
                            forward, gradient, inverse, l2_inner, norm_h1,
                            norm_lq, norm_w1q, plancherel_sum,
                            random_band_limited, read_field, resample,
                            symmetrize_radial, write_field)
from prnls.symbols import p_infty


def _random_field(grid, seed):
    rng = np.random.default_rng(seed)
    return Field(grid, rng.standard_normal(grid.shape))


# ---------------------------------------------------------------- transforms

def test_forward_dc_component_is_box_volume():
    grid = Grid(2, 32, 5.0)
    sf = forward(Field(grid, np.ones(grid.shape)))
    assert sf.coeffs[0, 0] == pytest.approx(100.0, rel=1e-12)  # (2L)^n
    rest = np.abs(sf.coeffs).ravel()[1:]
    assert np.max(rest) < 1e-10 * 100.0


def test_forward_single_cosine_has_two_modes():
    grid = Grid(1, 64, 3.0)
    f = Field.from_function(grid, lambda x: np.cos(np.pi * x / grid.L))
    coeffs = forward(f).coeffs
    big = np.abs(coeffs) > 1e-8 * np.max(np.abs(coeffs))
    assert np.flatnonzero(big).tolist() == [1, 63]  # k = +1 and k = -1


def test_roundtrip_random_fields():
    for n, N in ((1, 128), (2, 32), (3, 16)):
        grid = Grid(n, N, 7.0)
        f = _random_field(grid, 10 + n)
        back = inverse(forward(f))
        assert np.max(np.abs(back.values - f.values)) < 1e-13 * norm_lq(f, math.inf)


def test_conjugate_symmetry_of_real_transform():
    grid = Grid(1, 64, 3.0)
    c = forward(_random_field(grid, 3)).coeffs
    mirrored = np.conj(np.roll(c[::-1], 1))
    assert np.max(np.abs(c - mirrored)) < 1e-12 * np.max(np.abs(c))


# ---------------------------------------------------------------- multipliers

def test_multiplier_identity():
    grid = Grid(2, 32, 5.0)
    f = _random_field(grid, 0)
    g = apply_multiplier(lambda r2: np.ones_like(r2), f)
    assert np.max(np.abs(g.values - f.values)) < 1e-13 * norm_lq(f, math.inf)


def test_multiplier_eigenfunction():
    grid = Grid(1, 64, 3.0)
    f = Field.from_function(grid, lambda x: np.cos(np.pi * x / grid.L))
    g = apply_multiplier(lambda r2: r2, f)
    expected = (np.pi / grid.L) ** 2 * f.values
    assert np.max(np.abs(g.values - expected)) < 1e-12


def test_p_infty_roundtrip():
    grid = Grid(2, 32, 5.0)
    f = _random_field(grid, 1)
    g = apply_multiplier(lambda r2: 1.0 / (1.0 + r2), apply_multiplier(p_infty(), f))
    assert np.max(np.abs(g.values - f.values)) < 1e-12 * norm_lq(f, math.inf)


def test_multiplier_composition():
    grid = Grid(2, 32, 5.0)
    f = _random_field(grid, 2)
    s1 = lambda r2: 1.0 + 0.5 * r2
    s2 = lambda r2: np.exp(-0.1 * r2)
    a = apply_multiplier(s1, apply_multiplier(s2, f))
    b = apply_multiplier(lambda r2: s1(r2) * s2(r2), f)
    assert np.max(np.abs(a.values - b.values)) < 1e-12 * norm_lq(f, math.inf)


def test_inverse_rejects_broken_conjugate_symmetry():
    grid = Grid(1, 32, 3.0)
    bad = forward(_random_field(grid, 4)).coeffs.copy()
    bad[1] *= 2.0  # break c(-k) = conj(c(k)); the imaginary residue check fires
    with pytest.raises(SymmetryError):
        inverse(SpectralField(grid, bad))


# ---------------------------------------------------------------- derivatives

def test_gradient_constant_is_zero():
    grid = Grid(2, 32, 5.0)
    for d in gradient(Field(grid, np.ones(grid.shape))):
        assert np.max(np.abs(d.values)) < 1e-14


def test_gradient_single_mode():
    grid = Grid(1, 64, 3.0)
    f = Field.from_function(grid, lambda x: np.sin(np.pi * x / grid.L))
    (df,) = gradient(f)
    expected = (np.pi / grid.L) * np.cos(np.pi * grid.axis_coords / grid.L)
    assert np.max(np.abs(df.values - expected)) < 1e-12


def test_mixed_partials_commute():
    grid = Grid(2, 32, 5.0)
    f = _random_field(grid, 5)
    dx = gradient(f)
    dxy = gradient(dx[0])[1]
    dyx = gradient(dx[1])[0]
    scale = norm_lq(dxy, math.inf)
    assert np.max(np.abs(dxy.values - dyx.values)) < 1e-12 * max(scale, 1.0)


# ---------------------------------------------------------------------- norms

@pytest.mark.parametrize("q", [1.0, 2.0, 3.5])
def test_norm_lq_constant(q):
    grid = Grid(2, 32, 5.0)
    f = Field(grid, np.ones(grid.shape))
    assert norm_lq(f, q) == pytest.approx((2 * grid.L) ** (2.0 / q), rel=1e-12)


def test_norm_linf_is_max():
    grid = Grid(1, 64, 3.0)
    f = _random_field(grid, 6)
    assert norm_lq(f, math.inf) == np.max(np.abs(f.values))


def test_norm_l2_gaussian():
    grid = Grid(1, 256, 12.0)
    f = Field.from_function(grid, lambda x: np.exp(-(x ** 2)))
    assert norm_lq(f, 2) ** 2 == pytest.approx(math.sqrt(math.pi / 2), rel=1e-10)


def test_norm_h1_gaussian():
    # ||f||_2^2 = sqrt(pi/2) and ||f'||_2^2 = sqrt(pi/2) for f = exp(-x^2)
    grid = Grid(1, 256, 12.0)
    f = Field.from_function(grid, lambda x: np.exp(-(x ** 2)))
    assert norm_h1(f) == pytest.approx(math.sqrt(2 * math.sqrt(math.pi / 2)), rel=1e-10)


def test_norm_w1q_gaussian_q2():
    grid = Grid(1, 256, 12.0)
    f = Field.from_function(grid, lambda x: np.exp(-(x ** 2)))
    assert norm_w1q(f, 2) == pytest.approx(2 * (math.pi / 2) ** 0.25, rel=1e-10)


def test_parseval():
    grid = Grid(2, 32, 5.0)
    f = _random_field(grid, 7)
    assert plancherel_sum(f, lambda r2: np.ones_like(r2)) == pytest.approx(
        norm_lq(f, 2) ** 2, rel=1e-12)


def test_l2_inner_consistency():
    grid = Grid(1, 64, 3.0)
    f = _random_field(grid, 8)
    assert l2_inner(f, f) == pytest.approx(norm_lq(f, 2) ** 2, rel=1e-13)


def test_norm_lq_rejects_small_q():
    grid = Grid(1, 32, 3.0)
    with pytest.raises(ValueError):
        norm_lq(Field(grid, np.ones(grid.shape)), 0.5)


# -------------------------------------------------------------- symmetrization

def test_symmetrize_kills_odd_functions():
    # box large enough that the x = -L plane (its own reflection image on the
    # periodic lattice) carries nothing: the projection leaves a residue equal
    # to the function's value there
    grid = Grid(2, 32, 8.0)
    x, _ = grid.coords
    f = Field(grid, x * np.exp(-grid.radius_sq))
    assert np.max(np.abs(symmetrize_radial(f).values)) < 1e-14


def test_symmetrize_idempotent():
    grid = Grid(2, 32, 5.0)
    once = symmetrize_radial(_random_field(grid, 9))
    twice = symmetrize_radial(once)
    assert np.max(np.abs(twice.values - once.values)) <= 1e-15 * norm_lq(once, math.inf)


def test_symmetrize_kills_ground_state_translation_mode(gs2d_small):
    d1 = gradient(gs2d_small.u)[0]
    assert np.max(np.abs(symmetrize_radial(d1).values)) < 1e-12


def test_multipliers_commute_with_symmetrization():
    grid = Grid(2, 32, 5.0)
    f = _random_field(grid, 11)
    sym = lambda r2: 1.0 / (1.0 + r2)
    a = symmetrize_radial(apply_multiplier(sym, f))
    b = apply_multiplier(sym, symmetrize_radial(f))
    assert np.max(np.abs(a.values - b.values)) < 1e-12 * max(norm_lq(f, math.inf), 1.0)


# ---------------------------------------------------------------- housekeeping

def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(4, 32, 5.0)
    with pytest.raises(ValueError):
        Grid(2, 33, 5.0)
    with pytest.raises(ValueError):
        Grid(2, 8, 5.0)
    with pytest.raises(ValueError):
        Grid(2, 32, -1.0)


def test_grid_duality():
    grid = Grid(1, 64, 3.0)
    assert grid.h * grid.N == pytest.approx(2 * grid.L, rel=1e-15)
    assert np.min(grid.axis_coords) == pytest.approx(-grid.L)


def test_field_rejects_nonfinite():
    grid = Grid(1, 32, 3.0)
    bad = np.ones(grid.shape)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        Field(grid, bad)


def test_resample_to_finer_grid_hits_common_points():
    grid = Grid(1, 64, 5.0)
    f = Field.from_function(grid, lambda x: np.exp(-(x ** 2)))
    fine = resample(f, Grid(1, 128, 5.0))
    assert np.max(np.abs(fine.values[::2] - f.values)) < 1e-12


def test_random_band_limited_deterministic():
    grid = Grid(2, 32, 5.0)
    a = random_band_limited(grid, np.random.default_rng(5), 3.0)
    b = random_band_limited(grid, np.random.default_rng(5), 3.0)
    assert np.array_equal(a.values, b.values)


def test_field_dump_roundtrip(tmp_path):
    grid = Grid(2, 32, 5.0)
    f = _random_field(grid, 12)
    path = tmp_path / "field.bin"
    write_field(path, f, "unit", p=2.5, c=8.0)
    g, meta = read_field(path)
    assert np.array_equal(g.values, f.values)  # bit-exact
    assert g.grid == grid
    assert meta["label"] == "unit"
    assert meta["p"] == 2.5 and meta["c"] == 8.0
