import json

import numpy as np
import pytest

from bscat import (
    GridMismatchError,
    GridSpec,
    ScalarField,
    Space,
    SpaceTagError,
    SpaceTimeField,
    SupportViolationWarning,
    effective_radius,
    forward_transform,
    frequency_as_position,
    gaussian_transform,
    inner_product,
    inverse_transform,
    l2_norm,
    pairing,
    read_field,
    sample_gaussian,
    translate,
    write_field,
)
from bscat.grid import _freq_radius

from conftest import random_field


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(47, 10.0)
    with pytest.raises(ValueError):
        GridSpec(8, 10.0)
    with pytest.raises(ValueError):
        GridSpec(32, -1.0)
    spec = GridSpec(32, 8.0)
    assert spec.spacing == 0.5
    assert spec.axis()[spec.origin_index()] == 0.0
    # frequency nodes are pi k / L
    assert np.allclose(spec.freq_axis(), (np.pi / 8.0) * (np.arange(32) - 16))


def test_frequency_grid_duality():
    spec = GridSpec(48, 12.0)
    dual = spec.freq_grid()
    assert np.allclose(dual.axis(), spec.freq_axis())
    assert dual.spacing == pytest.approx(spec.freq_spacing)


def test_forward_gaussian_closed_form():
    spec = GridSpec(64, 10.0)
    f = sample_gaussian(spec, width=1.0)
    F = forward_transform(f)
    exact = gaussian_transform(spec, width=1.0)
    mask = _freq_radius(spec) <= 4.0
    err = np.max(np.abs(F.values - exact.values)[mask])
    assert err <= 1e-10 * np.max(np.abs(exact.values))


def test_forward_zero():
    spec = GridSpec(16, 8.0)
    z = ScalarField(spec, np.zeros((16, 16, 16), dtype=complex))
    assert l2_norm(forward_transform(z)) == 0.0


def test_roundtrip_random():
    spec = GridSpec(32, 9.0)
    f = random_field(spec, 1)
    back = inverse_transform(forward_transform(f))
    assert l2_norm(back - f) <= 1e-12 * l2_norm(f)


def test_parseval():
    spec = GridSpec(32, 9.0)
    f = random_field(spec, 2)
    F = forward_transform(f)
    lhs = l2_norm(F) ** 2 / (2 * np.pi) ** 3
    rhs = l2_norm(f) ** 2
    assert abs(lhs - rhs) <= 1e-12 * rhs


def test_shifted_gaussian_roundtrip():
    spec = GridSpec(64, 10.0)
    f = sample_gaussian(spec, center=(1.0, -0.5, 0.25), width=0.8)
    F = forward_transform(f)
    exact = gaussian_transform(spec, center=(1.0, -0.5, 0.25), width=0.8)
    assert np.max(np.abs(F.values - exact.values)) <= 1e-10 * np.max(np.abs(exact.values))
    back = inverse_transform(F)
    assert l2_norm(back - f) <= 1e-10 * l2_norm(f)


def test_space_tag_contracts():
    spec = GridSpec(16, 8.0)
    f = random_field(spec, 3)
    F = forward_transform(f)
    with pytest.raises(SpaceTagError):
        forward_transform(F)
    with pytest.raises(SpaceTagError):
        inverse_transform(f)
    with pytest.raises(SpaceTagError):
        inner_product(f, F)


def test_gaussian_peak_and_norm():
    spec = GridSpec(64, 10.0)
    f = sample_gaussian(spec, width=1.0, amplitude=2.0)
    i0 = spec.origin_index()
    assert f.values[i0, i0, i0] == 2.0
    assert np.max(np.abs(f.values)) == 2.0
    norm_sq = l2_norm(f) ** 2
    assert norm_sq == pytest.approx(4.0 * np.pi**1.5, rel=1e-8)


def test_gaussian_nodal_translation():
    spec = GridSpec(32, 8.0)
    f = sample_gaussian(spec, width=0.7)
    g = sample_gaussian(spec, center=(2 * spec.spacing, 0, 0), width=0.7)
    rolled = np.roll(f.values, 2, axis=0)
    assert np.max(np.abs(g.values - rolled)) <= 1e-14


def test_gaussian_support_warning():
    spec = GridSpec(16, 8.0)
    with pytest.warns(SupportViolationWarning):
        sample_gaussian(spec, center=(5.0, 0, 0), width=1.0)


def test_norm_of_zero_and_inner_product():
    spec = GridSpec(16, 8.0)
    z = ScalarField(spec, np.zeros((16, 16, 16), dtype=complex))
    assert l2_norm(z) == 0.0
    f = random_field(spec, 4)
    assert inner_product(f, f) == pytest.approx(l2_norm(f) ** 2)
    g = random_field(GridSpec(16, 9.0), 4)
    with pytest.raises(GridMismatchError):
        inner_product(f, g)


def test_pairing_is_bilinear_not_sesquilinear():
    spec = GridSpec(16, 8.0)
    f = random_field(spec, 5)
    g = random_field(spec, 6)
    assert pairing(f, g) == pytest.approx(pairing(g, f))
    assert pairing(1j * f, g) == pytest.approx(1j * pairing(f, g))
    assert inner_product(1j * f, g) == pytest.approx(1j * inner_product(f, g))
    assert inner_product(f, 1j * g) == pytest.approx(-1j * inner_product(f, g))


def test_translate_identity_and_roll():
    spec = GridSpec(32, 8.0)
    f = random_field(spec, 7)
    same = translate(f, (0.0, 0.0, 0.0))
    assert np.max(np.abs(same.values - f.values)) <= 1e-13 * np.max(np.abs(f.values))
    h = spec.spacing
    shifted = translate(f, (h, 0.0, 0.0))
    rolled = np.roll(f.values, 1, axis=0)
    assert np.max(np.abs(shifted.values - rolled)) <= 1e-12 * np.max(np.abs(f.values))


def test_translate_isometry():
    spec = GridSpec(32, 8.0)
    f = random_field(spec, 8)
    g = translate(f, (0.37, -1.7, 2.2))
    assert abs(l2_norm(g) - l2_norm(f)) <= 1e-12 * l2_norm(f)


def test_translate_matches_analytic_shift():
    spec = GridSpec(48, 10.0)
    f = sample_gaussian(spec, width=0.9)
    v = (0.63, -0.21, 0.11)
    g = translate(f, v)
    exact = sample_gaussian(spec, center=v, width=0.9)
    assert l2_norm(g - exact) <= 1e-8 * l2_norm(exact)


def test_effective_radius_gaussian():
    spec = GridSpec(48, 12.0)
    f = sample_gaussian(spec, width=1.0)
    r = effective_radius(f)
    # energy quantile of a width-1 gaussian sits near 4.8 sigma
    assert 4.0 <= r <= 5.6
    z = ScalarField(spec, np.zeros((48, 48, 48), dtype=complex))
    assert effective_radius(z) == 0.0


def test_field_arithmetic_checks():
    spec = GridSpec(16, 8.0)
    f = random_field(spec, 9)
    g = random_field(spec, 10)
    s = f + g
    assert np.array_equal(s.values, f.values + g.values)
    with pytest.raises(GridMismatchError):
        f + random_field(GridSpec(16, 9.0), 11)
    with pytest.raises(SpaceTagError):
        f + forward_transform(g)
    with pytest.raises(ValueError):
        ScalarField(spec, np.full((16, 16, 16), np.nan, dtype=complex))


def test_field_io_roundtrip(tmp_path):
    spec = GridSpec(16, 8.0)
    f = random_field(spec, 12)
    base = tmp_path / "field"
    jpath, bpath = write_field(base, f)
    assert jpath.exists() and bpath.exists()
    header = json.loads(jpath.read_text())
    assert header == {
        "n": 3,
        "N": 16,
        "L": 8.0,
        "space": "position",
        "dtype": "c128",
        "layout": "row-major z-fastest",
    }
    back = read_field(base)
    assert back.spec == f.spec
    assert back.space is f.space
    assert np.array_equal(back.values, f.values)


def test_field_io_rejects_bad_header(tmp_path):
    spec = GridSpec(16, 8.0)
    f = random_field(spec, 13)
    base = tmp_path / "field"
    jpath, _ = write_field(base, f)
    header = json.loads(jpath.read_text())
    del header["layout"]
    jpath.write_text(json.dumps(header))
    with pytest.raises(ValueError):
        read_field(base)


def test_frequency_as_position_retag():
    spec = GridSpec(32, 8.0)
    f = random_field(spec, 14)
    F = forward_transform(f)
    P = frequency_as_position(F)
    assert P.space is Space.POSITION
    assert P.spec == spec.freq_grid()
    assert np.array_equal(P.values, F.values)


def test_spacetimefield_invariants():
    spec = GridSpec(16, 8.0)
    tgrid = spec.spacing * np.arange(4)
    slices = tuple(random_field(spec, 20 + k) for k in range(4))
    stf = SpaceTimeField(spec, tgrid, slices)
    assert stf.steps == 3
    w = stf.time_weights()
    assert w[0] == w[-1] == spec.spacing / 2
    assert np.all(w[1:-1] == spec.spacing)
    with pytest.raises(ValueError):
        SpaceTimeField(spec, tgrid, slices[:-1])
    with pytest.raises(GridMismatchError):
        SpaceTimeField(spec, tgrid, slices[:-1] + (random_field(GridSpec(16, 9.0), 30),))
