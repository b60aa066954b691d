import math

import numpy as np
import pytest

from kgpair.bilinear import (
    SpectralField,
    SymbolGrid,
    TruncationWarning,
    bernstein_check,
    default_probe_symbols,
    holder_bound_probe,
    lp_project,
    profile_l1_constant,
    pseudo_product,
    ridge_bound_probe,
    shell_weighted_ratio,
    snap_lambda,
    symbol_l1_norm,
)
from kgpair.cutoffs import bump

N, L = 128, 64.0


@pytest.fixture()
def grid():
    return SpectralField.zeros(1, N, L)


def random_field(grid, rng):
    return grid.with_coef(rng.normal(size=grid.coef.shape) + 1j * rng.normal(size=grid.coef.shape))


def test_round_trip_and_parseval(grid):
    rng = np.random.default_rng(0)
    values = rng.normal(size=N) + 1j * rng.normal(size=N)
    f = SpectralField.from_physical(values, L)
    assert np.abs(f.to_physical() - values).max() < 1e-12 * np.abs(values).max()
    assert f.lp_norm(2) == pytest.approx(f.spectral_l2(), rel=1e-12)


def test_single_mode_single_coefficient(grid):
    x = grid.position_axis()
    k = 5 * grid.dxi
    f = SpectralField.from_physical(np.exp(1j * k * x), L)
    mags = np.abs(f.coef)
    assert np.count_nonzero(mags > 1e-10 * mags.max()) == 1
    assert int(np.argmax(mags)) == 5


def test_grid_validation():
    with pytest.raises(ValueError):
        SpectralField.zeros(2, 16, 1.0)
    with pytest.raises(ValueError):
        SpectralField.zeros(1, 100, 1.0)
    with pytest.raises(ValueError):
        SpectralField.zeros(3, 128, 1.0)


def test_unit_symbol_is_pointwise_product(grid):
    rng = np.random.default_rng(1)
    f, g = random_field(grid, rng), random_field(grid, rng)
    expected = f.to_physical() * g.to_physical()
    direct = pseudo_product(
        SymbolGrid.from_callable(lambda xi, eta: np.ones(np.broadcast_shapes(np.shape(xi), np.shape(eta)))),
        f,
        g,
    )
    fast = pseudo_product(SymbolGrid.constant(1.0), f, g)
    scale = np.abs(expected).max()
    assert np.abs(direct.to_physical() - expected).max() < 1e-10 * scale
    assert np.abs(fast.to_physical() - expected).max() < 1e-10 * scale


def test_separable_symbol_is_multiplier_product(grid):
    rng = np.random.default_rng(2)
    f, g = random_field(grid, rng), random_field(grid, rng)
    a = lambda eta: bump(np.asarray(eta) / 3.0)
    b = lambda diff: bump(np.asarray(diff) / 2.0)
    result = pseudo_product(SymbolGrid.separable(a, b), f, g)
    expected = f.apply_multiplier(a).to_physical() * g.apply_multiplier(b).to_physical()
    assert np.abs(result.to_physical() - expected).max() < 1e-10


def test_bilinearity(grid):
    rng = np.random.default_rng(3)
    f1, f2, g = (random_field(grid, rng) for _ in range(3))
    symbol = default_probe_symbols()["gaussian_joint"]
    alpha = 0.7 - 0.2j
    lhs = pseudo_product(symbol, alpha * f1 + f2, g)
    rhs = alpha * pseudo_product(symbol, f1, g) + pseudo_product(symbol, f2, g)
    assert np.abs(lhs.coef - rhs.coef).max() < 1e-12 * max(1.0, np.abs(rhs.coef).max())


def test_three_d_separable_product():
    rng = np.random.default_rng(4)
    n = 16
    values = rng.normal(size=(n, n, n))
    f = SpectralField.from_physical(values, 8.0)
    g = SpectralField.from_physical(values[::-1], 8.0)
    out = pseudo_product(SymbolGrid.constant(1.0), f, g)
    expected = f.to_physical() * g.to_physical()
    assert np.abs(out.to_physical() - expected).max() < 1e-10
    with pytest.raises(ValueError):
        pseudo_product(SymbolGrid.from_callable(lambda a, b: a + b), f, g)


def test_symbol_l1_constant_and_tensor(grid):
    assert symbol_l1_norm(SymbolGrid.constant(1.0), grid) == pytest.approx(1.0, abs=1e-12)
    a = lambda eta: bump(np.asarray(eta) / 3.0)
    b = lambda diff: bump(np.asarray(diff) / 2.0)
    xi = grid.frequency_axis()
    one_d = np.abs(np.fft.ifft(a(xi))).sum() * np.abs(np.fft.ifft(b(xi))).sum()
    assert symbol_l1_norm(SymbolGrid.separable(a, b), grid) == pytest.approx(one_d, abs=1e-8)


def test_truncation_warning(grid):
    rough = SymbolGrid.from_callable(
        lambda xi, eta: np.where(np.abs(xi - eta) < 0.1, 1.0, 0.0)
    )
    with pytest.warns(TruncationWarning):
        symbol_l1_norm(rough, grid)


def test_measured_operator_bounded_by_symbol_l1(grid):
    report = holder_bound_probe(n=N, box_length=L, pairs=100, seed=5)
    assert len(report["rows"]) >= 9
    for row in report["rows"]:
        assert row["max_normalized_ratio"] <= 1.0 + 1e-6, row


def test_lp_single_mode_in_plateau(grid):
    j = 2
    k = int(round(2.0**j / grid.dxi))
    coef = np.zeros(N, dtype=complex)
    coef[k] = 1.0
    f = grid.with_coef(coef)
    assert np.abs(lp_project(f, j).coef - coef).max() == 0.0


def test_lp_distant_blocks_annihilate(grid):
    rng = np.random.default_rng(6)
    f = random_field(grid, rng)
    for j, jp in ((0, 2), (1, 3), (0, 4), (2, 4)):
        twice = lp_project(lp_project(f, j), jp)
        assert np.abs(twice.coef).max() < 1e-12


def test_lp_telescoping_identity(grid):
    rng = np.random.default_rng(7)
    f = random_field(grid, rng)
    j_max = 4
    mask = grid.frequency_norms() <= 0.75 * 2.0**j_max
    band = grid.with_coef(f.coef * mask)
    total = lp_project(band, 0, mode="ball")
    for j in range(0, j_max + 1):
        total = total + lp_project(band, j)
    assert np.abs(total.coef - band.coef).max() < 1e-12


def test_bernstein_equal_exponents_unit_ratio():
    ratio = bernstein_check(2, 4.0, 4.0, trials=5, seed=0)
    assert ratio <= 1.0 + 1e-10


def test_bernstein_single_mode_volume_constant():
    box = 64.0
    grid = SpectralField.zeros(1, 2048, box)
    for j in (0, 2, 4):
        k = int(round(2.0**j / grid.dxi))
        coef = np.zeros(2048, dtype=complex)
        coef[k] = 1.0
        f = grid.with_coef(coef)
        assert f.lp_norm(math.inf) / f.lp_norm(2) == pytest.approx(box**-0.5, rel=1e-10)


def test_bernstein_ratios_j_independent():
    ratios = [bernstein_check(j, 6.0, 2.0, trials=30, seed=11) for j in range(6)]
    assert max(ratios) / min(ratios) < 2.0


def test_bernstein_rejects_bad_exponents():
    with pytest.raises(ValueError):
        bernstein_check(0, 2.0, 4.0)


def test_ridge_probe_uniform_in_rho():
    probe = ridge_bound_probe(trials=6, seed=1)
    constants = [row["profile_constant"] for row in probe["rows"]]
    adapted = [row["adapted_ratio"] for row in probe["rows"]]
    assert max(constants) / min(constants) < 1.1
    assert max(adapted) / min(adapted) < 1.1
    for row in probe["rows"]:
        assert row["adapted_ratio"] <= row["grid_constant"] * (1.0 + 1e-6)
        assert row["random_ratio"] <= row["grid_constant"] * (1.0 + 1e-6)


def test_profile_constant_matches_bound_shape():
    values = [profile_l1_constant(bump, rho) for rho in (1.0, 0.1, 0.01)]
    assert max(values) / min(values) < 1.01


def test_snap_lambda():
    snapped, err = snap_lambda(2.0)
    assert snapped == 2.0 and err == 0.0
    snapped, err = snap_lambda(27.41)
    assert snapped == 27.0 and err == pytest.approx(0.41 / 27.41, rel=1e-6)


def test_shell_weighted_rho_scaling():
    dxi = 2.0 * math.pi / 128.0
    for s in (0.5, 1.0):
        lo, hi = dxi, 10.0 * dxi
        c_lo = shell_weighted_ratio(R=16 * dxi, rho=lo, s=s)
        c_hi = shell_weighted_ratio(R=16 * dxi, rho=hi, s=s)
        measured = c_lo / c_hi
        predicted = (lo / hi) ** (s / 3.0)
        assert measured / predicted < 3.0
        assert predicted / measured < 3.0


def test_binary_round_trip():
    rng = np.random.default_rng(8)
    f = SpectralField.from_physical(rng.normal(size=N) + 1j * rng.normal(size=N), L)
    blob = f.to_bytes()
    assert blob[:8] == (1).to_bytes(8, "little")
    g = SpectralField.from_bytes(blob)
    assert g.dims == 1 and g.n == N and g.box_length == L
    assert np.array_equal(g.coef, f.coef)
    cube = SpectralField.from_physical(rng.normal(size=(8, 8, 8)), 4.0)
    assert np.array_equal(SpectralField.from_bytes(cube.to_bytes()).coef, cube.coef)


def test_spectrum_csv_shape():
    f = SpectralField.zeros(1, 8, 4.0)
    lines = f.spectrum_csv().strip().split("\n")
    assert lines[0] == "xi_0,re,im"
    assert len(lines) == 9


def test_grid_mismatch_rejected(grid):
    other = SpectralField.zeros(1, N, L / 2)
    with pytest.raises(ValueError):
        pseudo_product(SymbolGrid.constant(1.0), grid, other)
