"""
Parameter sweeps with eigenvalue tracking.

Every grid point is solved from scratch (optionally in parallel); tracks are
linked afterwards by nearest-neighbour matching against a secant prediction,
outward from an anchor point whose table labels name the tracks.
"""

import logging
import sys
import traceback
from concurrent.futures import Executor
from enum import Enum
from functools import partial
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ConfigDict, Field
from scipy.stats import linregress

from qbicladder.errors import QbicError, TrackingError
from qbicladder.executor import SerialExecutor
from qbicladder.model import ModelParams
from qbicladder.pydantic import QbicBaseModel
from qbicladder.spectrum import Eigenstate, StateKind, solve_spectrum

logger = logging.getLogger(__name__)

CONTINUITY_FLOOR = 1e-6
SECANT_FACTOR = 5.0
AMBIGUITY_RATIO = 2.0
IM_E_FLOOR = 1e-13


class SweepParam(str, Enum):
    e_d = "e_d"
    g = "g"
    tp_h = "tp_h"

    @classmethod
    def parse(cls, value: "SweepParam | str") -> "SweepParam":
        if isinstance(value, SweepParam):
            return value
        aliases = {"ed": cls.e_d, "e_d": cls.e_d, "g": cls.g, "tp": cls.tp_h, "tp_h": cls.tp_h}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(
                f"unknown sweep parameter {value!r}; use one of {sorted(aliases)}"
            ) from None


class SweepRecord(QbicBaseModel):
    """
    One eigenstate at one grid point, linked to its track.

    Attributes
    ----------
    param_name : SweepParam
    param_value : float
    state : Eigenstate
        Solved state; its ``label`` is the one found at this grid point.
    track_id : int
        Stable id of the physical state across the grid.
    label : str
        Label of the track at the anchor point.
    ambiguous : bool
        Another candidate was nearly as close when this record was linked.
    sheet_change : bool
        The track was continued onto a different sheet at this point.
    """

    model_config = ConfigDict(frozen=True)

    param_name: SweepParam
    param_value: float
    state: Eigenstate
    track_id: int = Field(ge=0)
    label: str
    ambiguous: bool = False
    sheet_change: bool = False


class ScalingFit(QbicBaseModel):
    """
    Power-law fit ``|Im E| = prefactor * g**exponent`` of one tracked state.
    """

    model_config = ConfigDict(frozen=True)

    state_label: str
    exponent: float
    prefactor: float
    r_squared: float
    g_grid: list[float]
    im_e: list[float]


def _solve_point(params: ModelParams, **kwargs) -> dict:
    """solve one grid point, returning the states or the captured failure"""
    try:
        return {"states": solve_spectrum(params, **kwargs), "error": None, "traceback": ""}
    except (QbicError, ValueError):
        exc = sys.exc_info()[1]
        return {
            "states": None,
            "error": f"{type(exc).__name__}: {exc}",
            "traceback": traceback.format_exc(),
        }


def _anchor_index(base: ModelParams, name: SweepParam, grid: np.ndarray) -> int:
    value = getattr(base, name.value)
    if grid.min() <= value <= grid.max():
        return int(np.argmin(np.abs(grid - value)))
    return 0


class _Track:
    def __init__(self, track_id: int, label: str, state: Eigenstate):
        self.track_id = track_id
        self.label = label
        self.history = [state.energy]
        self.sheet = state.sheet

    def prediction(self) -> complex:
        if len(self.history) < 2:
            return self.history[-1]
        return 2 * self.history[-1] - self.history[-2]

    def radius(self, step: float, scale: float, floor: float) -> float:
        r = max(SECANT_FACTOR * abs(step) * scale, floor * scale)
        if len(self.history) >= 2:
            r = max(r, SECANT_FACTOR * abs(self.history[-1] - self.history[-2]))
        return r


def _link(
    tracks: list[_Track],
    states: list[Eigenstate],
    step: float,
    scale: float,
    floor: float,
    ambiguity_ratio: float,
    value: float,
) -> list[tuple[_Track, Eigenstate, bool, bool]]:
    """greedy nearest-neighbour assignment of states to tracks"""
    predictions = np.array([t.prediction() for t in tracks])
    energies = np.array([s.energy for s in states])
    distances = np.abs(predictions[:, None] - energies[None, :])
    radii = np.array([t.radius(step, scale, floor) for t in tracks])
    same_sheet = np.array([[t.sheet is s.sheet for s in states] for t in tracks])

    assigned: dict[int, int] = {}
    sheet_changed: set[int] = set()
    for require_same_sheet in (True, False):
        order = np.dstack(np.unravel_index(np.argsort(distances, axis=None), distances.shape))[0]
        for i, j in order:
            if i in assigned or j in assigned.values():
                continue
            if distances[i, j] > radii[i]:
                continue
            if require_same_sheet and not same_sheet[i, j]:
                continue
            assigned[i] = j
            if not same_sheet[i, j]:
                sheet_changed.add(i)

    missing = [i for i in range(len(tracks)) if i not in assigned]
    if missing:
        i = missing[0]
        t = tracks[i]
        nearest = float(np.min(distances[i]))
        raise TrackingError(
            f"track {t.track_id} ({t.label}) lost at {value:g}: nearest state is "
            f"{nearest:.3e} away, continuity radius {radii[i]:.3e}; refine the grid",
            param_value=value,
            track_id=t.track_id,
        )

    links = []
    for i, j in sorted(assigned.items()):
        t, s = tracks[i], states[j]
        row = np.sort(distances[i][same_sheet[i]]) if same_sheet[i].any() else np.array([])
        ambiguous = (
            len(row) > 1 and row[1] < radii[i] and row[1] < ambiguity_ratio * row[0]
        )
        if ambiguous:
            logger.warning(
                f"ambiguous continuation of track {t.track_id} ({t.label}) at {value:g}: "
                f"candidates at {row[0]:.3e} and {row[1]:.3e}"
            )
        if i in sheet_changed:
            logger.warning(
                f"track {t.track_id} ({t.label}) moves from sheet {t.sheet.value} to "
                f"{s.sheet.value} at {value:g}"
            )
        links.append((t, s, bool(ambiguous), i in sheet_changed))
    return links


def sweep_parameter(
    base: ModelParams,
    param_name: SweepParam | str,
    grid: Sequence[float],
    executor: Optional[Executor] = None,
    continuity_floor: float = CONTINUITY_FLOOR,
    ambiguity_ratio: float = AMBIGUITY_RATIO,
    **solve_kwargs,
) -> list[SweepRecord]:
    """
    Solve the full spectrum along a one-parameter grid and link the states into
    tracks.

    Parameters
    ----------
    base : ModelParams
        Parameters held fixed; the swept one is replaced at every point.
    param_name : SweepParam
        ``e_d``, ``g`` or ``tp_h`` (``ed`` and ``tp`` also accepted).
    grid : sequence of float
        Strictly monotone grid.
    executor : Executor, optional
        Pool used to solve the grid points; serial when omitted.
    continuity_floor : float
        Smallest continuity radius in units of t_h.
    ambiguity_ratio : float
        A link is flagged when the second-closest candidate is within this
        factor of the closest.
    **solve_kwargs
        Passed on to ``solve_spectrum``.

    Returns
    -------
    list of SweepRecord
        Grid order, and within a grid point track order.

    Raises
    ------
    TrackingError
        If a grid point cannot be solved or a track has no candidate within its
        continuity radius; ``records`` holds the records linked so far.
    """
    name = SweepParam.parse(param_name)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty sequence")
    if grid.size > 1:
        steps = np.diff(grid)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("grid must be strictly monotone")

    executor = executor or SerialExecutor()
    points = [base.replace(**{name.value: float(v)}) for v in grid]
    results = list(executor.map(partial(_solve_point, **solve_kwargs), points))

    anchor = _anchor_index(base, name, grid)
    scale = base.t_h
    by_point: dict[int, list[SweepRecord]] = {}

    def fail(idx: int, track_id=None, message: str = ""):
        done = [r for k in sorted(by_point) for r in by_point[k]]
        raise TrackingError(
            message, param_value=float(grid[idx]), track_id=track_id, records=done
        )

    def solved(idx: int) -> list[Eigenstate]:
        result = results[idx]
        if result["error"] is not None:
            logger.debug(result["traceback"])
            fail(
                idx,
                message=f"solving the spectrum failed at {name.value}={grid[idx]:g}: "
                f"{result['error']}",
            )
        return result["states"]

    anchor_states = solved(anchor)
    by_point[anchor] = [
        SweepRecord(
            param_name=name,
            param_value=float(grid[anchor]),
            state=s,
            track_id=i,
            label=s.label,
        )
        for i, s in enumerate(anchor_states)
    ]

    for direction in (1, -1):
        tracks = [_Track(i, s.label, s) for i, s in enumerate(anchor_states)]
        idx = anchor + direction
        while 0 <= idx < grid.size:
            states = solved(idx)
            step = float(grid[idx] - grid[idx - direction])
            try:
                links = _link(
                    tracks, states, step, scale, continuity_floor, ambiguity_ratio, float(grid[idx])
                )
            except TrackingError as err:
                fail(idx, track_id=err.track_id, message=str(err))
            records = []
            for track, state, ambiguous, sheet_change in links:
                track.history.append(state.energy)
                track.sheet = state.sheet
                records.append(
                    SweepRecord(
                        param_name=name,
                        param_value=float(grid[idx]),
                        state=state,
                        track_id=track.track_id,
                        label=track.label,
                        ambiguous=ambiguous,
                        sheet_change=sheet_change,
                    )
                )
            by_point[idx] = sorted(records, key=lambda r: r.track_id)
            idx += direction

    logger.info(
        f"tracked {len(anchor_states)} states over {grid.size} values of {name.value}"
    )
    return [r for k in sorted(by_point) for r in by_point[k]]


def track_frame(records: Sequence[SweepRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "param_value": r.param_value,
                "track_id": r.track_id,
                "label": r.label,
                "re_e": r.state.energy.real,
                "im_e": r.state.energy.imag,
                "sheet": r.state.sheet.value,
                "kind": r.state.kind.value,
                "ambiguous": r.ambiguous,
                "sheet_change": r.sheet_change,
            }
            for r in records
        ],
        columns=[
            "param_value",
            "track_id",
            "label",
            "re_e",
            "im_e",
            "sheet",
            "kind",
            "ambiguous",
            "sheet_change",
        ],
    )


def select_track(records: Sequence[SweepRecord], label: str) -> list[SweepRecord]:
    selected = [r for r in records if r.label == label]
    if not selected:
        valid = ", ".join(sorted({r.label for r in records}))
        raise KeyError(f"no track labelled {label!r}; valid labels: {valid}")
    return selected


def fit_g_scaling(
    base: ModelParams,
    state_label: str,
    g_grid: Sequence[float],
    executor: Optional[Executor] = None,
    **solve_kwargs,
) -> ScalingFit:
    """
    Fit the coupling dependence of a resonance width.

    The state is tracked from the largest coupling downward and
    ``log|Im E|`` is regressed on ``log g`` over the points with
    ``|Im E| > 1e-13``.

    Raises
    ------
    ValueError
        For grids outside ``(0, 0.5 t_h]``, fewer than five points, or a state
        without width.
    TrackingError
        If the state cannot be followed across the grid.
    """
    g_grid = np.sort(np.asarray(g_grid, dtype=float))[::-1]
    if g_grid.size < 5:
        raise ValueError("g scaling needs at least five coupling values")
    if np.any(g_grid <= 0) or np.any(g_grid > 0.5 * base.t_h):
        raise ValueError(f"coupling values must lie in (0, {0.5 * base.t_h}]")
    if np.any(np.diff(g_grid) == 0):
        raise ValueError("coupling values must be distinct")

    records = select_track(
        sweep_parameter(base.replace(g=float(g_grid[0])), SweepParam.g, g_grid, executor, **solve_kwargs),
        state_label,
    )
    if records[0].state.kind in (StateKind.bound, StateKind.real_embedded):
        raise ValueError(f"state {state_label} is real and has no width to fit")

    g = np.array([r.param_value for r in records])
    im_e = np.array([abs(r.state.energy.imag) for r in records])
    keep = im_e > IM_E_FLOOR
    if keep.sum() < 2:
        raise ValueError(f"state {state_label} has |Im E| above {IM_E_FLOOR} at fewer than two points")

    fit = linregress(np.log(g[keep]), np.log(im_e[keep]))
    logger.info(
        f"{state_label}: |Im E| ~ g^{fit.slope:.3f} (r^2={fit.rvalue**2:.6f}, "
        f"{int(keep.sum())} points)"
    )
    return ScalingFit(
        state_label=state_label,
        exponent=float(fit.slope),
        prefactor=float(np.exp(fit.intercept)),
        r_squared=float(fit.rvalue**2),
        g_grid=g[keep].tolist(),
        im_e=im_e[keep].tolist(),
    )
