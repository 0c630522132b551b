import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_convex, random_star, regular_polygon, semicircle
from curveflow.errors import DegenerateSegment, EndpointOffSubstrate, GeometryError, WrongOrientation
from curveflow.geometry import (
    P,
    ClosedCurve,
    OpenChain,
    contact_angles,
    enclosed_area,
    mesh_ratio,
    read_curve_csv,
    segment_frames,
    total_length,
    turning_angle_sum,
    validate,
    write_curve_csv,
)


def test_square_is_valid(square):
    assert validate(square) is square


def test_reversed_square_rejected(square):
    with pytest.raises(WrongOrientation):
        validate(ClosedCurve(square.nodes[::-1]))


def test_repeated_node_rejected():
    chain = OpenChain([[1, 0], [0.5, 1], [0.5, 1], [-1, 0]])
    with pytest.raises(DegenerateSegment):
        validate(chain)


def test_endpoint_must_sit_on_substrate():
    with pytest.raises(EndpointOffSubstrate):
        validate(OpenChain([[1, 1e-15], [0, 1], [-1, 0]]))


def test_chain_must_start_at_right_contact():
    with pytest.raises(WrongOrientation):
        validate(OpenChain([[-1, 0], [0, 1], [1, 0]]))


def test_bad_shapes_rejected():
    with pytest.raises(GeometryError):
        ClosedCurve(np.zeros((3, 3)))
    with pytest.raises(GeometryError):
        ClosedCurve([[0, 0], [1, np.nan], [0, 1]])
    with pytest.raises(GeometryError):
        validate(ClosedCurve([[0, 0], [1, 0]]))


def test_square_frames(square):
    f = segment_frames(square)
    s = 1 / math.sqrt(2)
    assert np.allclose(f.tangents[0], [-s, s], atol=1e-15)
    assert np.allclose(f.normals[0], [s, s], atol=1e-15)
    assert f.lengths[0] == pytest.approx(math.sqrt(2), abs=1e-15)
    assert len(f) == 4


def test_horizontal_segment_normal_points_down():
    f = segment_frames(OpenChain([[1, 0], [0, 0.5], [-1, 0]]))
    chain = OpenChain([[0, 0], [1, 0], [1, 1]])
    g = segment_frames(chain)
    assert np.array_equal(g.tangents[0], [1, 0])
    assert np.array_equal(g.normals[0], [0, -1])
    assert len(f) == 2


def test_frames_orthonormal(rng):
    f = segment_frames(random_star(rng, 30))
    assert np.abs(np.hypot(*f.tangents.T) - 1).max() < 1e-14
    assert np.abs(np.sum(f.tangents * f.normals, axis=1)).max() < 1e-15
    assert np.array_equal(f.normals, f.tangents @ P.T)


@pytest.mark.parametrize("n", [3, 7, 40])
def test_regular_polygon_lengths(n):
    f = segment_frames(regular_polygon(n))
    assert np.allclose(f.lengths, 2 * math.sin(math.pi / n), rtol=0, atol=1e-14)


def test_lengths_examples(square):
    assert total_length(square) == pytest.approx(4 * math.sqrt(2), rel=1e-15)
    assert total_length(regular_polygon(40)) == pytest.approx(80 * math.sin(math.pi / 40), rel=1e-14)
    assert total_length(OpenChain([[1, 0], [0, 1], [-1, 0]])) == pytest.approx(2 * math.sqrt(2))


def test_areas(square):
    assert enclosed_area(square) == pytest.approx(2.0, rel=1e-15)
    for n in (3, 8, 41, 300):
        for r in (0.3, 1.0, 2.5):
            exact = 0.5 * n * math.sin(2 * math.pi / n) * r * r
            assert abs(enclosed_area(regular_polygon(n, r)) - exact) < 1e-13 * max(1, exact)


def test_semicircle_chain_area():
    # 41 nodes, closed along the substrate
    assert enclosed_area(semicircle(41)) == pytest.approx(20 * math.sin(math.pi / 40), abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(theta=st.floats(-math.pi, math.pi), dx=st.floats(-50, 50), dy=st.floats(-50, 50),
       seed=st.integers(0, 2**32 - 1))
def test_rigid_motion_invariance(theta, dx, dy, seed):
    curve = random_star(np.random.default_rng(seed), 25)
    c, s = math.cos(theta), math.sin(theta)
    moved = ClosedCurve(curve.nodes @ np.array([[c, s], [-s, c]]) + [dx, dy])
    assert total_length(moved) == pytest.approx(total_length(curve), rel=1e-12)
    assert enclosed_area(moved) == pytest.approx(enclosed_area(curve), rel=1e-12)


def test_turning_angles(square, rng):
    assert turning_angle_sum(square) == pytest.approx(2 * math.pi, abs=1e-15)
    for _ in range(20):
        assert abs(turning_angle_sum(random_star(rng, 50)) - 2 * math.pi) < 1e-12


def test_flower_turning_sum():
    from curveflow.cli import generate_initial
    assert abs(turning_angle_sum(generate_initial("flower", 80)) - 2 * math.pi) < 1e-12


def test_mesh_ratio_examples():
    assert mesh_ratio(regular_polygon(17)) == pytest.approx(1.0, abs=1e-14)
    tri = ClosedCurve([[0, 0], [2, 0], [0, 1]])
    assert mesh_ratio(tri) == pytest.approx(math.sqrt(5) / 1.0 * 1.0, rel=1e-15)
    assert mesh_ratio(semicircle(30)) == pytest.approx(1.0, abs=1e-14)


def test_mesh_ratio_at_least_one(rng):
    for _ in range(50):
        assert mesh_ratio(random_convex(rng, 12)) >= 1.0


def test_contact_angles_uniform_semicircle():
    for n in (5, 41):
        d = math.pi / (n - 1)
        right, left = contact_angles(semicircle(n))
        assert right == pytest.approx(math.pi / 2 - d / 2, abs=1e-14)
        assert left == pytest.approx(math.pi / 2 - d / 2, abs=1e-14)


def test_contact_angles_box_and_obtuse():
    right, left = contact_angles(OpenChain([[1, 0], [1, 1], [-1, 1], [-1, 0]]))
    assert (right, left) == pytest.approx((math.pi / 2, math.pi / 2), abs=1e-15)
    right, left = contact_angles(OpenChain([[1, 0], [2, 1], [-2, 1], [-1, 0]]))
    assert right == pytest.approx(3 * math.pi / 4, abs=1e-15)
    assert left == pytest.approx(3 * math.pi / 4, abs=1e-15)


def test_csv_round_trip_bitwise(tmp_path, rng):
    curve = random_star(rng, 33)
    write_curve_csv(curve, tmp_path / "c.csv")
    back = read_curve_csv(tmp_path / "c.csv", closed=True)
    assert back.nodes.tobytes() == curve.nodes.tobytes()
    chain = semicircle(12)
    write_curve_csv(chain, tmp_path / "s.csv")
    assert read_curve_csv(tmp_path / "s.csv", closed=False).nodes.tobytes() == chain.nodes.tobytes()


def test_csv_header_checked(tmp_path):
    (tmp_path / "bad.csv").write_text("x,y\n0,0\n")
    with pytest.raises(GeometryError):
        read_curve_csv(tmp_path / "bad.csv")
