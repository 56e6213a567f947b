"""
Time-domain oracle: the finite ladder with adatom as an explicit Hermitian
matrix, survival probabilities and decay-rate fits.

Sites ``(x, y)`` with ``x in [-L, L]`` and ``y in {1, 2}`` map to row
``2 (x + L) + (y - 1)``; the dot is the last row. Boundaries are open, so fits
are only meaningful before the reflection horizon ``2 L / t_h``.
"""

import logging
import warnings
from enum import Enum
from typing import Any, Optional

import numpy as np
import scipy.sparse as sp
from pydantic import ConfigDict, Field, field_validator
from scipy.sparse.linalg import eigsh, expm_multiply
from scipy.special import jv
from scipy.stats import linregress

from qbicladder.errors import FitQualityWarning, HorizonWarning, IntegratorError
from qbicladder.model import Channel, ModelParams, band_edges
from qbicladder.pydantic import QbicBaseModel
from qbicladder.spectrum import Eigenstate, SheetId, StateKind
from qbicladder.wavefunction import WavefunctionProfile

logger = logging.getLogger(__name__)

NORM_DRIFT_TOL = 1e-8
CHEBYSHEV_CUTOFF = 1e-17
TAPER_FRACTION = 0.1
MIN_FIT_R_SQUARED = 0.9
DENSE_LIMIT = 400


class Propagator(str, Enum):
    chebyshev = "chebyshev"
    expm = "expm"


class FiniteLadder(QbicBaseModel):
    """
    Open-boundary ladder of ``2 L + 1`` rungs plus the dot.

    Attributes
    ----------
    params : ModelParams
    half_length : int
        L; sites run over ``x in [-L, L]``.
    matrix : scipy.sparse.csr_matrix
        Real symmetric Hamiltonian in the site-plus-dot basis.
    """

    params: ModelParams
    half_length: int = Field(ge=1)
    matrix: Any = Field(exclude=True, repr=False)

    @property
    def dimension(self) -> int:
        return 2 * (2 * self.half_length + 1) + 1

    @property
    def dot_index(self) -> int:
        return 2 * (2 * self.half_length + 1)

    @property
    def reflection_horizon(self) -> float:
        return 2.0 * self.half_length / self.params.t_h

    def site_index(self, x: int, y: int) -> int:
        if abs(x) > self.half_length or y not in (1, 2):
            raise IndexError(f"site ({x}, {y}) is not on a ladder with L={self.half_length}")
        return 2 * (x + self.half_length) + (y - 1)

    def site_of(self, index: int) -> tuple[int, int] | str:
        if index == self.dot_index:
            return "dot"
        if not 0 <= index < self.dot_index:
            raise IndexError(f"row {index} out of range")
        return index // 2 - self.half_length, index % 2 + 1

    def gershgorin_bounds(self) -> tuple[float, float]:
        m = self.matrix.tocsr()
        diag = m.diagonal()
        radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
        return float(np.min(diag - radius)), float(np.max(diag + radius))

    def energy(self, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, self.matrix @ psi)))

    def eigenvalues(self) -> np.ndarray:
        """full dense spectrum; for small ladders only"""
        return np.linalg.eigvalsh(self.matrix.toarray())


def build_finite_ladder(params: ModelParams, half_length: int) -> FiniteLadder:
    """
    Hamiltonian of the truncated ladder: leg hopping ``-t_h/2``, rung hopping
    ``-t'_h``, dot level ``E_d`` and coupling ``g`` between the dot and ``(0, 1)``.
    """
    if half_length < 1:
        raise ValueError(f"half_length must be at least 1, got {half_length}")

    n_rungs = 2 * half_length + 1
    dim = 2 * n_rungs + 1
    dot = dim - 1
    rows, cols, vals = [], [], []

    def bond(i, j, value):
        rows.extend((i, j))
        cols.extend((j, i))
        vals.extend((value, value))

    for r in range(n_rungs):
        leg1, leg2 = 2 * r, 2 * r + 1
        if params.tp_h != 0.0:
            bond(leg1, leg2, -params.tp_h)
        if r + 1 < n_rungs:
            bond(leg1, leg1 + 2, -0.5 * params.t_h)
            bond(leg2, leg2 + 2, -0.5 * params.t_h)
    if params.g != 0.0:
        bond(2 * half_length, dot, params.g)
    rows.append(dot)
    cols.append(dot)
    vals.append(params.e_d)

    matrix = sp.csr_matrix(
        (np.asarray(vals, dtype=float), (rows, cols)), shape=(dim, dim)
    )
    logger.debug(f"built finite ladder L={half_length} (dimension {dim}, nnz {matrix.nnz})")
    return FiniteLadder(params=params, half_length=half_length, matrix=matrix)


def dot_state(ladder: FiniteLadder) -> np.ndarray:
    psi = np.zeros(ladder.dimension, dtype=complex)
    psi[ladder.dot_index] = 1.0
    return psi


def _taper(x: np.ndarray, window: int) -> np.ndarray:
    inner = (1.0 - TAPER_FRACTION) * window
    width = TAPER_FRACTION * window
    ax = np.abs(x).astype(float)
    out = np.ones_like(ax)
    edge = ax > inner
    if width > 0:
        out[edge] = 0.5 * (1.0 + np.cos(np.pi * (ax[edge] - inner) / width))
    out[ax > window] = 0.0
    return out


def truncated_eigenstate(
    ladder: FiniteLadder, profile: WavefunctionProfile, window: Optional[int] = None
) -> np.ndarray:
    """
    Normalized initial vector from an analytic profile.

    The profile is kept on ``|x| <= window`` (default ``L // 2``) with a cosine
    taper over the outer tenth of the window; the dot amplitude is taken as is.
    """
    window = ladder.half_length // 2 if window is None else int(window)
    if window < 1 or window > ladder.half_length:
        raise ValueError(f"window must lie in [1, {ladder.half_length}], got {window}")
    if profile.x[0] > -window or profile.x[-1] < window:
        raise ValueError(f"profile does not cover |x| <= {window}")

    x = np.asarray(profile.x)
    keep = np.abs(x) <= window
    weights = _taper(x[keep], window)
    leg1 = np.asarray(profile.psi_leg1, dtype=complex)[keep] * weights
    leg2 = np.asarray(profile.psi_leg2, dtype=complex)[keep] * weights

    psi = np.zeros(ladder.dimension, dtype=complex)
    idx = 2 * (x[keep] + ladder.half_length)
    psi[idx] = leg1
    psi[idx + 1] = leg2
    psi[ladder.dot_index] = profile.psi_dot
    return psi / np.linalg.norm(psi)


def _chebyshev_step(
    matrix, psi: np.ndarray, dt: float, centre: float, half_width: float
) -> np.ndarray:
    """``exp(-i H dt) psi`` by Chebyshev expansion on ``[centre - half_width, centre + half_width]``"""
    alpha = half_width * dt

    def scaled(v):
        return (matrix @ v - centre * v) / half_width

    t_prev = psi
    t_curr = scaled(psi)
    result = jv(0, alpha) * t_prev + 2.0 * (-1j) * jv(1, alpha) * t_curr
    k = 1
    while True:
        k += 1
        coeff = 2.0 * (-1j) ** k * jv(k, alpha)
        t_prev, t_curr = t_curr, 2.0 * scaled(t_curr) - t_prev
        result = result + coeff * t_curr
        if k > alpha and abs(coeff) < CHEBYSHEV_CUTOFF:
            break
    return np.exp(-1j * centre * dt) * result


def propagate(
    ladder: FiniteLadder,
    psi: np.ndarray,
    t: float,
    dt: float = 1.0,
    method: Propagator | str = Propagator.chebyshev,
) -> np.ndarray:
    """state at time ``t`` reached in steps of at most ``dt``"""
    method = Propagator(method)
    n_steps = max(1, int(np.ceil(t / dt - 1e-12)))
    step = t / n_steps
    lo, hi = ladder.gershgorin_bounds()
    centre, half_width = 0.5 * (hi + lo), 0.5 * (hi - lo) * 1.01
    for _ in range(n_steps):
        psi = _advance(ladder, psi, step, method, centre, half_width)
    return psi


def _advance(ladder, psi, dt, method, centre, half_width):
    if method is Propagator.chebyshev:
        return _chebyshev_step(ladder.matrix, psi, dt, centre, half_width)
    return expm_multiply((-1j * dt) * ladder.matrix.tocsc(), psi)


class SurvivalTrace(QbicBaseModel):
    """
    Survival probability ``|<initial|psi(t)>|^2`` on a uniform time grid.

    Attributes
    ----------
    times : list of float
        Increasing times in units of 1/t_h, starting at zero.
    probability : list of float
    initial : str
        ``dot`` or ``state:<label>``.
    reflection_horizon : float
        ``2 L / t_h``; later times see the open boundaries.
    norm_drift : float
        Largest ``| ||psi||^2 - 1 |`` during the run.
    energy_drift : float
        Largest change of ``<psi|H|psi>`` in units of ``max(|<H>_0|, w)``, ``w``
        the half-width of the spectral bounds.
    method : Propagator
    """

    model_config = ConfigDict(frozen=True)

    times: list[float]
    probability: list[float]
    initial: str = "dot"
    reflection_horizon: float = Field(gt=0.0)
    norm_drift: float = 0.0
    energy_drift: float = 0.0
    method: Propagator = Propagator.chebyshev

    @field_validator("times")
    @classmethod
    def validate_times(cls, value):
        if len(value) > 1 and np.any(np.diff(value) <= 0):
            raise ValueError("times must be strictly increasing")
        return value


def evolve_survival(
    ladder: FiniteLadder,
    initial: np.ndarray,
    t_max: float,
    dt: float,
    method: Propagator | str = Propagator.chebyshev,
    label: str = "dot",
    norm_drift_tol: float = NORM_DRIFT_TOL,
) -> SurvivalTrace:
    """
    Propagate ``initial`` and record its survival probability.

    Parameters
    ----------
    ladder : FiniteLadder
    initial : np.ndarray
        Normalized initial vector.
    t_max : float
        Final time; a HorizonWarning is issued beyond ``2 L / t_h``.
    dt : float
        Sampling interval, also the propagation step.
    method : Propagator
        ``chebyshev`` (default) or ``expm`` for scipy's expm_multiply.
    label : str
        Description of the initial state stored on the trace.
    norm_drift_tol : float
        Bound on the norm drift and on the energy drift
        ``|<H> - <H>_0| / max(|<H>_0|, w)``, with ``w`` the half-width of the
        Gershgorin interval.

    Returns
    -------
    SurvivalTrace

    Raises
    ------
    IntegratorError
        If the norm or the energy drifts beyond ``norm_drift_tol``.
    """
    method = Propagator(method)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_max < 0:
        raise ValueError(f"t_max must be non-negative, got {t_max}")

    psi0 = np.asarray(initial, dtype=complex)
    if psi0.shape != (ladder.dimension,):
        raise ValueError(f"initial vector must have length {ladder.dimension}")
    psi0 = psi0 / np.linalg.norm(psi0)

    if t_max > ladder.reflection_horizon:
        message = (
            f"t_max={t_max} exceeds the reflection horizon "
            f"{ladder.reflection_horizon:g}; later samples see the boundaries"
        )
        logger.warning(message)
        warnings.warn(message, HorizonWarning, stacklevel=2)

    n_steps = int(np.ceil(t_max / dt - 1e-12))
    times = dt * np.arange(n_steps + 1)
    lo, hi = ladder.gershgorin_bounds()
    centre, half_width = 0.5 * (hi + lo), 0.5 * (hi - lo) * 1.01

    e0 = ladder.energy(psi0)
    energy_scale = max(abs(e0), half_width)
    probability = [1.0]
    norm_drift = energy_drift = 0.0
    psi = psi0
    for step in range(1, n_steps + 1):
        psi = _advance(ladder, psi, dt, method, centre, half_width)
        norm_drift = max(norm_drift, abs(np.vdot(psi, psi).real - 1.0))
        energy_drift = max(energy_drift, abs(ladder.energy(psi) - e0) / energy_scale)
        if norm_drift > norm_drift_tol or energy_drift > norm_drift_tol:
            raise IntegratorError(
                f"{method.value} propagation drifted at t={times[step]:g} "
                f"(norm {norm_drift:.2e}, energy {energy_drift:.2e})",
                drift=max(norm_drift, energy_drift),
            )
        probability.append(float(min(1.0, abs(np.vdot(psi0, psi)) ** 2)))

    logger.debug(
        f"evolved {label} to t={t_max} in {n_steps} steps; norm drift {norm_drift:.2e}"
    )
    return SurvivalTrace(
        times=times.tolist(),
        probability=probability,
        initial=label,
        reflection_horizon=ladder.reflection_horizon,
        norm_drift=float(norm_drift),
        energy_drift=float(energy_drift),
        method=method,
    )


class DecayFit(QbicBaseModel):
    """
    Log-linear fit ``log P(t) = intercept - rate * t`` on a time window.

    ``warning`` carries the message of a poor-quality fit.
    """

    model_config = ConfigDict(frozen=True)

    rate: float
    r_squared: float
    intercept: float
    window: tuple[float, float]
    n_points: int
    warning: Optional[str] = None


def fit_decay_rate(
    trace: SurvivalTrace, window: tuple[float, float], min_r_squared: float = MIN_FIT_R_SQUARED
) -> DecayFit:
    t_lo, t_hi = float(window[0]), float(window[1])
    times = np.asarray(trace.times)
    prob = np.asarray(trace.probability)
    if not t_lo < t_hi:
        raise ValueError(f"window must be increasing, got {window}")
    if t_lo < times[0] or t_hi > times[-1]:
        raise ValueError(f"window {window} is outside the trace domain [{times[0]}, {times[-1]}]")
    if t_hi > trace.reflection_horizon:
        raise ValueError(
            f"window end {t_hi} is beyond the reflection horizon {trace.reflection_horizon:g}"
        )

    mask = (times >= t_lo) & (times <= t_hi)
    if mask.sum() < 3:
        raise ValueError("decay fit needs at least three samples in the window")
    if np.any(prob[mask] <= 0):
        raise ValueError("survival probability must be positive on the fit window")

    result = linregress(times[mask], np.log(prob[mask]))
    r_squared = float(result.rvalue**2)
    warning = None
    if r_squared < min_r_squared:
        warning = (
            f"non-exponential window {window}: r^2={r_squared:.3f} below {min_r_squared}"
        )
        logger.warning(warning)
        warnings.warn(warning, FitQualityWarning, stacklevel=2)

    return DecayFit(
        rate=float(-result.slope),
        r_squared=r_squared,
        intercept=float(result.intercept),
        window=(t_lo, t_hi),
        n_points=int(mask.sum()),
        warning=warning,
    )


def finite_size_bound_energies(
    ladder: FiniteLadder, params: Optional[ModelParams] = None, k: int = 4
) -> list[float]:
    """
    Eigenvalues of the finite ladder lying outside both bands.

    Only the ``k`` extreme eigenvalues at each end are computed (``eigsh``); small
    ladders are diagonalized densely.
    """
    params = params or ladder.params
    edges = band_edges(params)
    lowest, highest = edges.all_edges()[0], edges.all_edges()[-1]

    if ladder.dimension <= DENSE_LIMIT:
        values = ladder.eigenvalues()
    else:
        k = min(k, ladder.dimension - 2)
        low = eigsh(ladder.matrix, k=k, which="SA", return_eigenvectors=False)
        high = eigsh(ladder.matrix, k=k, which="LA", return_eigenvectors=False)
        values = np.concatenate([low, high])

    outside = sorted(float(e) for e in np.unique(values) if e < lowest or e > highest)
    logger.debug(f"L={ladder.half_length}: {len(outside)} eigenvalues outside the bands")
    return outside


def continuation_sheet(params: ModelParams, energy: float) -> SheetId:
    """
    Sheet entered when the physical axis is crossed downwards at ``energy``.

    Channels open at ``energy`` continue to ``Im K < 0``; closed channels keep
    ``Im K > 0``.
    """
    edges = band_edges(params)
    return SheetId.from_signs(
        not edges.contains(Channel.plus, energy), not edges.contains(Channel.minus, energy)
    )


def dominant_resonance(
    params: ModelParams, states: list[Eigenstate], energy: float
) -> Eigenstate:
    """
    Decaying pole that sets the survival of a state localized near ``energy``.

    Poles on the continuation sheet at ``energy`` are preferred; among them the
    one closest in real energy is returned.
    """
    resonant = [s for s in states if s.kind is StateKind.resonant]
    if not resonant:
        raise ValueError("no resonant states to compare with")
    sheet = continuation_sheet(params, energy)
    candidates = [s for s in resonant if s.sheet is sheet] or resonant
    return min(candidates, key=lambda s: abs(s.energy.real - energy))
