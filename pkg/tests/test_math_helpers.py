import pytest

from src.utils.math_helpers import clamp, from_unit_box, population, to_unit_box

ROWS = [(0.001, 0.12), (15.0, 200.0), (0.0, 300.0)]


def test_population_clipped():
    assert population(-1.0) == 0.0
    assert population(1.0) == 1.0
    assert population(0.0) == 0.5
    assert population(1.0 + 1e-12) == 1.0


def test_unit_box_corners():
    assert from_unit_box([0.0, 0.0, 0.0], ROWS) == [0.001, 15.0, 0.0]
    assert from_unit_box([1.0, 1.0, 1.0], ROWS) == pytest.approx([0.12, 200.0, 300.0])


def test_unit_box_clamps_outside_points():
    assert from_unit_box([-0.5, 1.5, 0.5], ROWS) == pytest.approx([0.001, 200.0, 150.0])


def test_unit_box_inverse():
    point = [0.03, 60.0, 80.0]
    assert from_unit_box(to_unit_box(point, ROWS), ROWS) == pytest.approx(point)


def test_clamp():
    assert clamp(5, 0, 3) == 3
    assert clamp(-1, 0, 3) == 0
    assert clamp(2, 0, 3) == 2
