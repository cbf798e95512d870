import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tlsph.errors import StlParseError, WatertightnessError
from tlsph.geometry import (
    TriangleMesh,
    box_mesh,
    box_region,
    fill_mesh_with_lattice,
    generate_lattice_box,
    initial_velocity_field,
    parse_stl,
    slab_region,
    sphere_mesh,
    tube_mesh,
    write_stl_ascii,
    write_stl_binary,
)


# -- lattice boxes -----------------------------------------------------------

def test_lattice_box_cable_dimensions():
    pos, V0, m = generate_lattice_box((10.0, 0.2, 0.2), 0.05, rho0=8000.0)
    assert pos.shape == (200 * 4 * 4, 3)
    assert np.all(V0 == 0.05**3)
    assert np.sum(m) == pytest.approx(8000.0 * 3200 * 0.05**3, rel=1e-12)
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    assert np.allclose(lo, 0.025)
    assert np.allclose(hi, [9.975, 0.175, 0.175])


def test_lattice_box_single_cell():
    pos, V0, _ = generate_lattice_box((1.0, 1.0, 1.0), 1.0)
    assert pos.shape == (1, 3)
    assert np.allclose(pos[0], [0.5, 0.5, 0.5])


def test_lattice_box_rejects_oversized_spacing():
    with pytest.raises(ValueError):
        generate_lattice_box((1.0, 0.2, 0.2), 0.5)
    with pytest.raises(ValueError):
        generate_lattice_box((1.0, 1.0, 1.0), -0.1)


def test_regions_tag_and_select():
    pos, _, _ = generate_lattice_box((1.0, 1.0, 1.0), 0.25)
    slab = slab_region(0, -np.inf, 0.3, tag="clamp")
    assert slab.tag == "clamp"
    assert slab.contains(pos).sum() == 16  # one lattice plane of 4 x 4
    box = box_region((0, 0, 0), (0.3, 0.3, 0.3), tag="probe")
    assert box.contains(pos).sum() == 1


# -- STL parsing and writing ---------------------------------------------------

def test_cube_binary_round_trip():
    cube = box_mesh()
    mesh = parse_stl(write_stl_binary(cube))
    assert mesh.n_triangles == 12
    lo, hi = mesh.bounds()
    assert np.allclose(lo, 0.0) and np.allclose(hi, 1.0)


def test_cube_ascii_and_binary_agree():
    cube = box_mesh()
    from_bin = parse_stl(write_stl_binary(cube))
    from_ascii = parse_stl(write_stl_ascii(cube).encode())
    vb = np.sort(from_bin.triangle_soup().reshape(-1, 3), axis=0)
    va = np.sort(from_ascii.triangle_soup().reshape(-1, 3), axis=0)
    assert np.array_equal(vb, va)


def test_empty_payload_rejected():
    with pytest.raises(StlParseError):
        parse_stl(b"")


def test_truncated_binary_rejected_with_offset():
    data = write_stl_binary(box_mesh())
    with pytest.raises(StlParseError) as exc:
        parse_stl(data[:-7])
    assert exc.value.byte_offset is not None


def test_ascii_keyword_violation_reports_line():
    text = "solid x\n  facet normal 0 0 1\n    outer loop\n      vortex 0 0 0\n"
    with pytest.raises(StlParseError) as exc:
        parse_stl(text.encode())
    assert exc.value.line == 4


def test_ascii_incomplete_facet_rejected():
    text = (
        "solid x\n facet normal 0 0 1\n  outer loop\n"
        "   vertex 0 0 0\n   vertex 1 0 0\n  endloop\n endfacet\nendsolid x\n"
    )
    with pytest.raises(StlParseError):
        parse_stl(text.encode())


def test_degenerate_triangles_dropped_with_warning():
    cube = box_mesh()
    soup = cube.triangle_soup()
    bad = np.concatenate([soup, [[soup[0, 0], soup[0, 0], soup[0, 1]]]])
    mesh = TriangleMesh(vertices=bad.reshape(-1, 3),
                        triangles=np.arange(bad.size // 3).reshape(-1, 3))
    with pytest.warns(UserWarning, match="zero-area"):
        parsed = parse_stl(write_stl_binary(mesh))
    assert parsed.n_triangles == 12
    assert parsed.n_degenerate_dropped == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_binary_round_trip_is_float32_identity(seed):
    rng = np.random.default_rng(seed)
    soup = rng.uniform(-10.0, 10.0, size=(rng.integers(1, 8), 3, 3))
    areas = np.linalg.norm(
        np.cross(soup[:, 1] - soup[:, 0], soup[:, 2] - soup[:, 0]), axis=1
    )
    soup = soup[areas > 1e-6]
    if soup.shape[0] == 0:
        return
    mesh = TriangleMesh(vertices=soup.reshape(-1, 3),
                        triangles=np.arange(soup.size // 3).reshape(-1, 3))
    parsed = parse_stl(write_stl_binary(mesh))
    got = np.sort(parsed.triangle_soup().reshape(-1, 3), axis=0)
    expected = np.sort(soup.astype(np.float32).astype(np.float64).reshape(-1, 3), axis=0)
    assert np.array_equal(got, expected)


# -- lattice fill -----------------------------------------------------------------

def test_cube_fill_matches_analytic_membership():
    pts = fill_mesh_with_lattice(box_mesh(), 0.25)
    assert pts.shape == (64, 3)
    assert np.all((pts > 0.0) & (pts < 1.0))


@pytest.mark.parametrize("lo,hi,dp", [
    ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), 0.2),
    ((-0.3, 1.7, 2.0), (0.9, 2.3, 2.4), 0.1),
    ((5.0, 5.0, 5.0), (5.75, 6.5, 7.0), 0.25),
])
def test_box_fill_matches_analytic_count(lo, hi, dp):
    # extents divide evenly by dp, so the candidate lattice is exact
    extents = np.subtract(hi, lo)
    expected = int(np.prod(np.round(extents / dp)))
    pts = fill_mesh_with_lattice(box_mesh(lo, hi), dp)
    assert pts.shape[0] == expected
    assert np.all((pts > lo) & (pts < hi))


def test_sphere_fill_volume_within_five_percent():
    pts = fill_mesh_with_lattice(sphere_mesh(radius=1.0), 0.1)
    volume = pts.shape[0] * 0.1**3
    analytic = 4.0 / 3.0 * np.pi
    assert abs(volume - analytic) <= 0.05 * analytic


def test_sphere_fill_matches_analytic_membership_away_from_surface():
    dp = 0.2
    pts = fill_mesh_with_lattice(sphere_mesh(radius=1.0, n_lat=64, n_lon=128), dp)
    r = np.linalg.norm(pts, axis=1)
    assert np.all(r < 1.0 + 0.5 * dp)
    # every clearly-interior lattice point must be present
    lo = -1.0 + (0.5) * dp
    grid = fill_mesh_with_lattice(box_mesh((-1, -1, -1), (1, 1, 1)), dp)
    inside = grid[np.linalg.norm(grid, axis=1) <= 1.0 - 0.5 * dp]
    present = {tuple(np.round(p, 9)) for p in pts}
    assert all(tuple(np.round(p, 9)) in present for p in inside)


def test_non_watertight_mesh_detected():
    cube = box_mesh()
    holed = TriangleMesh(vertices=cube.vertices,
                         triangles=np.delete(cube.triangles, 2, axis=0))
    with pytest.raises(WatertightnessError, match="repair"):
        fill_mesh_with_lattice(holed, 0.1)


def test_thin_plate_triggers_resolution_warning():
    plate = box_mesh((0.0, 0.0, 0.0), (1.0, 1.0, 0.06))
    with pytest.warns(UserWarning, match="thinner than 3 particles"):
        fill_mesh_with_lattice(plate, 0.03)


def test_tube_fixture_fills_cleanly():
    import warnings

    mesh = tube_mesh(outer_radius=0.4, inner_radius=0.3, length=1.0, segments=48)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pts = fill_mesh_with_lattice(mesh, 0.03)
    volume = pts.shape[0] * 0.03**3
    analytic = np.pi * (0.4**2 - 0.3**2) * 1.0
    assert abs(volume - analytic) <= 0.05 * analytic
    radii = np.linalg.norm(pts[:, :2], axis=1)
    assert radii.min() > 0.3 - 0.015 and radii.max() < 0.4 + 0.015


# -- initial velocity fields ---------------------------------------------------------

def test_cable_velocity_field():
    pos, _, _ = generate_lattice_box((10.0, 0.2, 0.2), 0.05)
    v = initial_velocity_field("cable", pos, v0=5.0)
    moving = v[:, 0] == 5.0
    assert moving.sum() == 800  # the right quarter: 50 of 200 lattice planes
    assert np.all(pos[moving, 0] >= 7.5)
    assert np.all(v[:, 1:] == 0.0)


def test_bending_velocity_field_is_uniform():
    pos = np.zeros((5, 3))
    v = initial_velocity_field("bending", pos, v0=10.0)
    assert np.allclose(v, [10.0 * np.sqrt(3.0) / 2.0, 5.0, 0.0])
    assert np.allclose(np.linalg.norm(v, axis=1), 10.0)


def test_twisting_velocity_field_values():
    pts = np.array([
        [0.0, 0.0, 0.0],
        [0.0, 6.0, 0.0],
        [0.5, 6.0, 0.5],
    ])
    v = initial_velocity_field("twisting", pts, omega0=105.0, length=6.0)
    assert np.array_equal(v[0], np.zeros(3))
    assert np.array_equal(v[1], np.zeros(3))
    assert np.array_equal(v[2], np.array([52.5, 0.0, -52.5]))


def test_twisting_velocity_bound():
    rng = np.random.default_rng(6)
    pts = rng.uniform(-0.5, 6.0, size=(200, 3))
    omega0 = 105.0
    v = initial_velocity_field("twisting", pts, omega0=omega0, length=6.0)
    bound = omega0 * np.linalg.norm(pts, axis=1).max()
    assert np.all(np.linalg.norm(v, axis=1) <= bound + 1e-12)


def test_twisting_requires_omega0():
    with pytest.raises(ValueError, match="omega0"):
        initial_velocity_field("twisting", np.zeros((1, 3)))


def test_unknown_case_rejected():
    with pytest.raises(ValueError, match="unknown case"):
        initial_velocity_field("wobbling", np.zeros((1, 3)))


def test_stl_case_starts_at_rest():
    v = initial_velocity_field("stl", np.ones((4, 3)))
    assert np.array_equal(v, np.zeros((4, 3)))
