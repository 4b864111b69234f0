"""Frequency-table construction and axial rotary application."""

import math

import numpy as np
import pytest

from ropeflow.rope2d import (
    FrequencyTable,
    HeadVectors,
    PositionGrid,
    apply_axial_rope,
    build_frequency_table,
)

# (1e-4)**(32/63), evaluated independently at 40 digits
THETA_32_OF_64 = 0.0092950978988064914784


def test_geometric_series_endpoints():
    t = build_frequency_table(2, 1e-4)
    assert t.theta[0] == 1.0
    assert t.theta[1] == 1e-4


@pytest.mark.parametrize("base", [1e-4, 1e-2, 10.0, 10000.0])
def test_first_entry_is_one(base):
    assert build_frequency_table(16, base).theta[0] == 1.0


def test_midpoint_against_high_precision_value():
    t = build_frequency_table(64, 1e-4)
    np.testing.assert_allclose(t.theta[32], THETA_32_OF_64, rtol=1e-6)


def test_wavelength_theta_product():
    t = build_frequency_table(48, 1e-4)
    np.testing.assert_allclose(t.theta * t.wavelength, 2 * np.pi, rtol=1e-14)


def test_monotone_directions():
    assert np.all(np.diff(build_frequency_table(8, 1e-4).theta) < 0)
    assert np.all(np.diff(build_frequency_table(8, 100.0).theta) > 0)


def test_build_errors():
    with pytest.raises(ValueError):
        build_frequency_table(1, 1e-4)
    with pytest.raises(ValueError):
        build_frequency_table(8, 0.0)
    with pytest.raises(ValueError):
        build_frequency_table(8, -2.0)
    with pytest.raises(ValueError):
        build_frequency_table(8, 1.0)


def test_table_is_immutable():
    t = build_frequency_table(4, 1e-4)
    with pytest.raises(ValueError):
        t.theta[0] = 5.0


def test_table_validation():
    with pytest.raises(ValueError):
        FrequencyTable(theta=np.array([1.0, 0.5, 0.7]), theta_base=1e-4)  # not monotone
    with pytest.raises(ValueError):
        FrequencyTable(theta=np.array([1.0, -0.5]), theta_base=1e-4)


def _grid(h, w, py=None, px=None):
    return PositionGrid(height=h, width=w, positions_y=py, positions_x=px)


def test_position_grid_defaults_and_scale():
    g = PositionGrid(height=8, width=16, train_context=(8, 8))
    assert g.tokens == 128
    assert g.scale == (1.0, 2.0)
    np.testing.assert_array_equal(g.positions_x, np.arange(16.0))


def test_position_grid_validation():
    with pytest.raises(ValueError):
        _grid(4, 4, py=np.array([0.0, 1.0, 1.0, 2.0]))  # not strictly increasing
    with pytest.raises(ValueError):
        _grid(4, 4, px=np.arange(3.0))  # wrong length


def test_head_vectors_require_multiple_of_four():
    with pytest.raises(ValueError):
        HeadVectors(values=np.zeros((4, 6)))


def _oracle_rotate(values, grid, table_x, table_y):
    """Independent trigonometric evaluation with explicit Python loops."""
    tokens, d = values.shape
    D = d // 4
    out = np.array(values, dtype=np.float64)
    for i in range(tokens):
        y, x = divmod(i, grid.width)
        for axis, pos in (("x", grid.positions_x[x]), ("y", grid.positions_y[y])):
            theta = table_x.theta if axis == "x" else table_y.theta
            offset = 0 if axis == "x" else d // 2
            for dd in range(D):
                ang = pos * theta[dd]
                c, s = math.cos(ang), math.sin(ang)
                a = values[i, offset + 2 * dd]
                b = values[i, offset + 2 * dd + 1]
                out[i, offset + 2 * dd] = a * c - b * s
                out[i, offset + 2 * dd + 1] = a * s + b * c
    return out


def test_rotation_at_position_zero_is_identity():
    table = build_frequency_table(2, 1e-4)
    grid = _grid(1, 1)
    v = HeadVectors(values=np.arange(8.0).reshape(1, 8))
    out = apply_axial_rope(v, grid, table, table)
    np.testing.assert_array_equal(out.values, v.values)


def test_norm_preservation():
    rng = np.random.default_rng(0)
    table = build_frequency_table(4, 1e-4)
    grid = _grid(5, 3)
    v = HeadVectors(values=rng.standard_normal((15, 16)))
    out = apply_axial_rope(v, grid, table, table)
    np.testing.assert_allclose(
        np.linalg.norm(out.values, axis=1),
        np.linalg.norm(v.values, axis=1),
        rtol=1e-12,
    )


def test_matches_independent_oracle():
    rng = np.random.default_rng(1)
    table_x = build_frequency_table(3, 1e-4)
    table_y = build_frequency_table(3, 1e-2)
    grid = _grid(4, 4, py=np.array([0.0, 1.5, 3.0, 7.0]), px=np.arange(4.0))
    v = HeadVectors(values=rng.standard_normal((16, 12)))
    out = apply_axial_rope(v, grid, table_x, table_y)
    np.testing.assert_allclose(out.values, _oracle_rotate(v.values, grid, table_x, table_y), atol=1e-13)


def test_relative_position_identity_brute_force():
    """<rope(q, m), rope(k, n)> == <rope(q, m-n), k> over a 4x4 (m, n) grid."""
    rng = np.random.default_rng(2)
    table = build_frequency_table(4, 1e-4)
    d = 16
    for axis in ("x", "y"):
        for m in range(4):
            for n in range(4):
                q = rng.standard_normal(d)
                k = rng.standard_normal(d)

                def rot(vec, pos):
                    if axis == "x":
                        grid = _grid(1, 1, py=np.zeros(1), px=np.array([float(pos)]))
                    else:
                        grid = _grid(1, 1, py=np.array([float(pos)]), px=np.zeros(1))
                    return _oracle_rotate(vec[None, :], grid, table, table)[0]

                lhs = float(rot(q, m) @ rot(k, n))
                rhs = float(rot(q, m - n) @ k)
                assert abs(lhs - rhs) < 1e-6


def test_apply_shape_errors():
    table = build_frequency_table(4, 1e-4)
    small = build_frequency_table(2, 1e-4)
    v = HeadVectors(values=np.zeros((4, 16)))
    with pytest.raises(ValueError):
        apply_axial_rope(v, _grid(2, 2), small, table)
    with pytest.raises(ValueError):
        apply_axial_rope(v, _grid(2, 3), table, table)


def test_determinism():
    rng = np.random.default_rng(3)
    table = build_frequency_table(4, 1e-4)
    grid = _grid(3, 3)
    v = HeadVectors(values=rng.standard_normal((9, 16)))
    a = apply_axial_rope(v, grid, table, table)
    b = apply_axial_rope(v, grid, table, table)
    np.testing.assert_array_equal(a.values, b.values)
