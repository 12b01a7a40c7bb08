import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intersim.scenario import (
    Lane,
    Scenario,
    ScenarioError,
    SpatialGrid,
    TrafficLight,
    in_central_area,
    light_color_at,
    load_scenario,
    neighbors_of,
    point_in_polygon,
    points_in_polygon,
    save_scenario,
    seconds_remaining,
)

PHASES = (("green", 10.0), ("yellow", 3.0), ("red", 10.0))
UNIT_SQUARE = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])


@pytest.fixture
def light():
    return TrafficLight(np.array([(0.0, 0.0), (4.0, 0.0)]), PHASES, {"L"})


@pytest.fixture
def square_scene():
    lane = Lane.from_centerline("L", [(-10.0, 0.5), (0.0, 0.5)], 1.0)
    return Scenario((lane,), (), UNIT_SQUARE)


class TestLights:
    @pytest.mark.parametrize("t, color", [(0.0, "green"), (23.0, "green"), (11.5, "yellow"), (13.0, "red"),
                                          (22.99, "red")])
    def test_color(self, light, t, color):
        assert light_color_at(light, t) == color

    @pytest.mark.parametrize("t, remaining", [(11.0, 2.0), (0.0, 10.0), (12.9, 0.1)])
    def test_seconds_remaining(self, light, t, remaining):
        assert seconds_remaining(light, t) == pytest.approx(remaining, abs=1e-9)

    @given(st.floats(0.0, 1e4, allow_nan=False))
    def test_periodic(self, t):
        light = TrafficLight(np.array([(0.0, 0.0), (4.0, 0.0)]), PHASES, {"L"})
        assert light_color_at(light, t) == light_color_at(light, t + light.cycle_length)

    def test_time_per_color_matches_configuration(self, light):
        step = 0.01
        spent = {"green": 0.0, "yellow": 0.0, "red": 0.0}
        for k in range(int(round(light.cycle_length / step))):
            spent[light_color_at(light, (k + 0.5) * step)] += step
        for color, dur in PHASES:
            assert spent[color] == pytest.approx(dur, abs=1e-6)

    @pytest.mark.parametrize("phases", [(), (("green", 0.0),), (("blue", 3.0),)])
    def test_invalid_phases(self, phases):
        with pytest.raises(ScenarioError):
            TrafficLight(np.array([(0.0, 0.0), (4.0, 0.0)]), phases, {"L"})

    def test_degenerate_stop_line(self):
        with pytest.raises(ScenarioError):
            TrafficLight(np.array([(1.0, 1.0), (1.0, 1.0)]), PHASES, {"L"})


class TestLane:
    def test_direction_is_unit(self):
        lane = Lane.from_centerline("L", [(0.0, 0.0), (3.0, 4.0)], 2.0)
        assert np.allclose(lane.direction, (0.6, 0.8))

    @pytest.mark.parametrize("centerline, width", [([(0.0, 0.0)], 1.0), ([(0.0, 0.0), (0.0, 0.0)], 1.0),
                                                   ([(0.0, 0.0), (1.0, 0.0)], 0.0)])
    def test_invalid(self, centerline, width):
        with pytest.raises(ScenarioError):
            Lane.from_centerline("L", centerline, width)

    def test_non_unit_direction(self):
        with pytest.raises(ScenarioError):
            Lane("L", np.array([(0.0, 0.0), (1.0, 0.0)]), 1.0, np.array([2.0, 0.0]), np.zeros(2))

    @given(st.lists(st.tuples(st.floats(-20, 20), st.floats(-5, 5)), min_size=1, max_size=30),
           st.floats(0.0, 0.9))
    def test_vectorised_contains_matches_scalar(self, pts, margin):
        lane = Lane.from_centerline("L", [(0.0, 0.0), (8.0, 0.0), (8.0, 8.0)], 3.0)
        vec = lane.contains_points(pts)
        assert vec.tolist() == [lane.contains(p) for p in pts]
        shrunk = lane.contains_points(pts, margin)
        assert not np.any(shrunk & ~vec)


class TestCentralArea:
    @pytest.mark.parametrize("p, inside", [((0.5, 0.5), True), ((2.0, 2.0), False), ((1.0, 0.5), True),
                                           ((0.0, 0.0), True), ((-1e-3, 0.5), False)])
    def test_unit_square(self, square_scene, p, inside):
        assert in_central_area(square_scene, p) is inside

    @given(st.lists(st.tuples(st.floats(-1, 2), st.floats(-1, 2)), min_size=1, max_size=40))
    def test_vectorised_polygon_matches_scalar(self, pts):
        poly = np.array([(0.0, 0.0), (2.0, 0.0), (1.5, 1.5), (0.2, 1.0)])
        assert points_in_polygon(poly, pts).tolist() == [point_in_polygon(poly, p) for p in pts]

    def test_degenerate_polygon(self):
        with pytest.raises(ScenarioError):
            Scenario((), (), np.array([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]))


class TestScenario:
    def test_light_must_reference_known_lanes(self):
        lane = Lane.from_centerline("L", [(0.0, 0.0), (1.0, 0.0)], 1.0)
        light = TrafficLight(np.array([(0.0, 0.0), (1.0, 0.0)]), PHASES, {"missing"})
        with pytest.raises(ScenarioError, match="missing"):
            Scenario((lane,), (light,), UNIT_SQUARE)

    def test_dt(self, square_scene):
        assert square_scene.dt == pytest.approx(1.0 / 30.0)

    def test_file_round_trip(self, crossroad, tmp_path):
        path = tmp_path / "scene.json"
        save_scenario(crossroad, path)
        again = load_scenario(path)
        assert [lane.id for lane in again.lanes] == [lane.id for lane in crossroad.lanes]
        for a, b in zip(again.lanes, crossroad.lanes):
            assert np.array_equal(a.centerline, b.centerline) and a.allowed_kinds == b.allowed_kinds
        assert [light.phases for light in again.lights] == [light.phases for light in crossroad.lights]
        assert np.array_equal(again.central_area, crossroad.central_area)

    def test_outside_extent(self, crossroad):
        low, high = crossroad.extent
        assert not crossroad.outside((0.0, 0.0))
        assert crossroad.outside(high + 1.0)
        assert not crossroad.outside(high + 1.0, margin=2.0)

    def test_on_route(self, crossroad):
        pts = np.array([(2.0, -30.0), (0.0, 0.0), (-2.0, -30.0), (30.0, 30.0)])
        assert crossroad.on_route(pts, ("in_S", None)).tolist() == [True, True, False, False]


class TestGrid:
    def test_single_agent(self):
        grid = SpatialGrid.build(10.0, {1: (0.0, 0.0)})
        assert neighbors_of(grid, 1) == []

    def test_same_cell(self):
        grid = SpatialGrid.build(10.0, {1: (1.0, 1.0), 2: (2.0, 2.0)})
        assert neighbors_of(grid, 1) == [2] and neighbors_of(grid, 2) == [1]

    def test_three_cells_apart(self):
        grid = SpatialGrid.build(10.0, {1: (5.0, 5.0), 2: (35.0, 5.0)})
        assert neighbors_of(grid, 1) == []

    def test_unknown_agent(self):
        with pytest.raises(KeyError):
            neighbors_of(SpatialGrid(10.0), 7)

    @given(st.dictionaries(st.integers(0, 50), st.tuples(st.floats(-100, 100), st.floats(-100, 100)), max_size=30))
    def test_symmetric_and_adjacent(self, positions):
        grid = SpatialGrid.build(10.0, positions)
        for a in positions:
            for b in neighbors_of(grid, a):
                assert a in neighbors_of(grid, b)
                ca, cb = grid.cell_of(positions[a]), grid.cell_of(positions[b])
                assert max(abs(ca[0] - cb[0]), abs(ca[1] - cb[1])) <= 1

    @given(st.dictionaries(st.integers(0, 30), st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=1,
                           max_size=20),
           st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=1, max_size=20))
    @settings(max_examples=50)
    def test_incremental_equals_rebuild(self, start, moves):
        grid = SpatialGrid.build(10.0, start)
        now = dict(start)
        for aid, p in zip(sorted(start), moves):
            grid.move(aid, p)
            now[aid] = p
        assert grid.assignment() == SpatialGrid.build(10.0, now).assignment()
        cells = [aid for ids in grid.cells.values() for aid in ids]
        assert sorted(cells) == sorted(now)

    def test_brute_force_neighbourhood(self):
        rng = np.random.default_rng(0)
        pos = {i: tuple(rng.uniform(-40, 40, 2)) for i in range(60)}
        grid = SpatialGrid.build(10.0, pos)
        for i in pos:
            expect = sorted(j for j in pos if j != i and all(
                abs(math.floor(pos[i][k] / 10.0) - math.floor(pos[j][k] / 10.0)) <= 1 for k in range(2)))
            assert neighbors_of(grid, i) == expect
