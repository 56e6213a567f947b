from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from qbicladder.errors import TrackingError
from qbicladder.executor import SerialExecutor, get_executor
from qbicladder.resources.testing import CANONICAL, CANONICAL_LABELS
from qbicladder.spectrum import StateKind
from qbicladder.sweep import (
    SweepParam,
    fit_g_scaling,
    select_track,
    sweep_parameter,
    track_frame,
)


@pytest.fixture(scope="module")
def ed_records():
    return sweep_parameter(CANONICAL, "ed", [0.29, 0.30, 0.31])


class TestSweepParam:
    def test_parse(self):
        assert SweepParam.parse("ed") is SweepParam.e_d
        assert SweepParam.parse("tp") is SweepParam.tp_h
        assert SweepParam.parse("G") is SweepParam.g
        assert SweepParam.parse(SweepParam.g) is SweepParam.g
        with pytest.raises(ValueError, match="unknown sweep parameter"):
            SweepParam.parse("t_h")


class TestSweep:
    def test_records(self, ed_records):
        assert len(ed_records) == 36
        assert [r.param_value for r in ed_records[:12]] == [0.29] * 12
        assert {r.track_id for r in ed_records} == set(range(12))

        anchor = [r for r in ed_records if r.param_value == 0.30]
        assert [r.label for r in anchor] == CANONICAL_LABELS
        assert [r.state.label for r in anchor] == CANONICAL_LABELS

    def test_tracks_follow_states(self, ed_records):
        for label in ("Q4", "S1", "R2", "P2"):
            track = select_track(ed_records, label)
            assert len(track) == 3
            assert len({r.state.sheet for r in track}) == 1
            assert not any(r.sheet_change for r in track)

        q4 = select_track(ed_records, "Q4")
        assert [r.param_value for r in q4] == [0.29, 0.30, 0.31]
        # the narrow resonance follows the dot level
        for r in q4:
            assert abs(r.state.energy.real - r.param_value) < 1e-3
            assert r.state.energy.imag < 0

    def test_track_frame(self, ed_records):
        frame = track_frame(ed_records)
        assert len(frame) == 36
        assert list(frame.columns) == [
            "param_value",
            "track_id",
            "label",
            "re_e",
            "im_e",
            "sheet",
            "kind",
            "ambiguous",
            "sheet_change",
        ]
        assert set(frame["label"]) == set(CANONICAL_LABELS)
        assert track_frame([]).empty

    def test_select_track_missing(self, ed_records):
        with pytest.raises(KeyError, match="valid labels"):
            select_track(ed_records, "Z9")

    def test_anchor_outside_grid(self):
        records = sweep_parameter(CANONICAL, "ed", [-0.2, -0.21])
        assert {r.param_value for r in records[:12]} == {-0.2}
        assert len(records) == 24

    def test_single_point(self):
        records = sweep_parameter(CANONICAL, SweepParam.tp_h, [0.345])
        assert [r.label for r in records] == CANONICAL_LABELS

    def test_descending_grid(self):
        records = sweep_parameter(CANONICAL, "tp", [0.35, 0.345, 0.34])
        assert [r.param_value for r in records[::12]] == [0.35, 0.345, 0.34]
        anchor = [r for r in records if r.param_value == 0.345]
        assert [r.label for r in anchor] == CANONICAL_LABELS

    @pytest.mark.parametrize("grid", [[], [0.3, 0.3], [0.1, 0.3, 0.2]])
    def test_bad_grid(self, grid):
        with pytest.raises(ValueError):
            sweep_parameter(CANONICAL, "ed", grid)

    def test_thread_pool_matches_serial(self, ed_records):
        with ThreadPoolExecutor(max_workers=2) as executor:
            records = sweep_parameter(CANONICAL, "ed", [0.29, 0.30, 0.31], executor=executor)
        assert [(r.track_id, r.state.energy) for r in records] == [
            (r.track_id, r.state.energy) for r in ed_records
        ]

    def test_failed_point(self):
        with pytest.raises(TrackingError) as err:
            sweep_parameter(CANONICAL, "g", [0.1, 0.09, 0.0])
        assert err.value.param_value == 0.0
        assert len(err.value.records) == 24
        assert "g > 0" in str(err.value)


class TestExecutor:
    def test_serial(self):
        executor = SerialExecutor()
        assert list(executor.map(abs, [-1, 2])) == [1, 2]
        assert executor.submit(pow, 2, 3).result() == 8
        future = executor.submit(int, "x")
        assert isinstance(future.exception(), ValueError)
        executor.shutdown()
        with pytest.raises(RuntimeError):
            executor.submit(abs, 1)

    def test_get_executor(self):
        with get_executor(None) as executor:
            assert isinstance(executor, SerialExecutor)
        with get_executor("thread_pool", max_workers=2) as executor:
            assert list(executor.map(abs, [-3])) == [3]
        with pytest.raises(ValueError):
            with get_executor("dask"):
                pass


class TestScaling:
    def test_quasi_bound_state(self):
        fit = fit_g_scaling(CANONICAL, "Q2", np.linspace(0.05, 0.2, 7))
        assert fit.exponent == pytest.approx(6.0, abs=0.3)
        assert fit.r_squared > 0.999
        assert fit.g_grid[0] == pytest.approx(0.2)
        assert len(fit.im_e) == 7

    def test_ordinary_resonance(self):
        fit = fit_g_scaling(CANONICAL, "Q4", np.linspace(0.05, 0.2, 7))
        assert fit.exponent == pytest.approx(2.0, abs=0.3)

    def test_validation(self):
        with pytest.raises(ValueError, match="five"):
            fit_g_scaling(CANONICAL, "Q2", [0.1, 0.2])
        with pytest.raises(ValueError):
            fit_g_scaling(CANONICAL, "Q2", [0.1, 0.2, 0.3, 0.4, 0.6])
        with pytest.raises(ValueError):
            fit_g_scaling(CANONICAL, "Q2", [0.0, 0.1, 0.2, 0.3, 0.4])

    def test_real_state(self):
        with pytest.raises(ValueError, match="no width"):
            fit_g_scaling(CANONICAL, "P1", np.linspace(0.1, 0.2, 5))


def group_by_value(records):
    groups = {}
    for r in records:
        groups.setdefault(r.param_value, []).append(r)
    return groups


@pytest.fixture(scope="module")
def dot_level_sweep():
    return sweep_parameter(CANONICAL, "ed", np.linspace(-2.0, 3.0, 501))


@pytest.mark.slow
class TestDotLevelSweep:
    def test_twelve_tracks_everywhere(self, dot_level_sweep):
        groups = group_by_value(dot_level_sweep)
        assert len(groups) == 501
        for value, records in groups.items():
            assert sorted(r.track_id for r in records) == list(range(12)), value

    def test_quasi_bound_width(self, dot_level_sweep):
        for r in select_track(dot_level_sweep, "Q2"):
            width = abs(r.state.energy.imag)
            if r.param_value <= -1.4:
                assert width < 1e-12, r.param_value
            elif r.param_value >= -1.3:
                assert width > 1e-12, r.param_value

    def test_conjugate_tracks(self, dot_level_sweep):
        q2 = select_track(dot_level_sweep, "Q2")
        q3 = select_track(dot_level_sweep, "Q3")
        assert [r.param_value for r in q2] == [r.param_value for r in q3]
        for a, b in zip(q2, q3):
            assert abs(a.state.energy.imag + b.state.energy.imag) < 1e-12, a.param_value

    def test_quasi_bound_stays_below_upper_band(self, dot_level_sweep):
        lower_min = CANONICAL.band_edges.lower_band[0]
        upper_min = CANONICAL.band_edges.upper_band[0]
        for r in select_track(dot_level_sweep, "Q2"):
            assert lower_min <= r.state.energy.real <= upper_min, r.param_value


class TestReflectedSweep:
    def test_spectrum_mirrors(self):
        grid = np.linspace(-0.5, 0.5, 11)
        groups = group_by_value(sweep_parameter(CANONICAL, "ed", grid))
        values = sorted(groups)
        for value, opposite in zip(values[:5], values[::-1]):
            assert value == pytest.approx(-opposite)
            energies = np.array([r.state.energy for r in groups[value]])
            mirrored = np.array([r.state.energy for r in groups[opposite]])
            assert len(energies) == len(mirrored) == 12
            for e in energies:
                assert min(abs(mirrored + e)) < 1e-8, value
