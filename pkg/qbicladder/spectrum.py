"""
Discrete eigenstates of the ladder-with-adatom model.

Every root of the dispersion polynomial is an eigenvalue on one of four Riemann
sheets, labelled by the signs of the imaginary parts of the two channel wave
numbers::

    sheet   Im K+   Im K-
    I        > 0     > 0     bound states
    II       < 0     > 0
    III      > 0     < 0
    IV       < 0     < 0

With ``sqrt((z + s t'_h)^2 - t_h^2) = i t_h sin K_s`` the dispersion equation
reads ``R = z - E_d - (g^2/2) [1/(i t_h sin K+) + 1/(i t_h sin K-)] = 0`` and the
sheet choice is explicit in the wave numbers.
"""

import logging
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import ConfigDict, Field, model_validator

from qbicladder.errors import (
    ConvergenceError,
    NearCutError,
    OnCutError,
    SpectrumStructureError,
    SpuriousRootError,
)
from qbicladder.model import CHANNELS, Channel, ModelParams, band_edges
from qbicladder.polynomial import (
    EPS,
    ComplexPoly,
    dispersion_polynomial,
    find_roots,
    residual_bound,
)
from qbicladder.pydantic import Complex, QbicBaseModel

logger = logging.getLogger(__name__)

CLASSIFY_TOL = 1e-3
REFINE_TOL = 1e-12
REAL_AXIS_TOL = 1e-12
ON_CUT_TOL = 1e-14
SEED_CUT_TOL = 1e-6
EDGE_TOL = 1e-8
DUPLICATE_RADIUS = 1e-8
MAX_NEWTON_ITER = 50
N_STATES = 12
# backtracking failures below this multiple of the rounding floor count as converged
STALL_FACTOR = 64


class SheetId(str, Enum):
    I = "I"  # noqa: E741
    II = "II"
    III = "III"
    IV = "IV"

    @classmethod
    def from_wave_numbers(cls, k_plus: complex, k_minus: complex) -> "SheetId":
        return cls.from_signs(k_plus.imag >= 0.0, k_minus.imag >= 0.0)

    @classmethod
    def from_signs(cls, plus_upper: bool, minus_upper: bool) -> "SheetId":
        return {
            (True, True): cls.I,
            (False, True): cls.II,
            (True, False): cls.III,
            (False, False): cls.IV,
        }[(bool(plus_upper), bool(minus_upper))]

    @property
    def signs(self) -> tuple[int, int]:
        """sign of Im K+ and Im K- on this sheet"""
        return {
            SheetId.I: (1, 1),
            SheetId.II: (-1, 1),
            SheetId.III: (1, -1),
            SheetId.IV: (-1, -1),
        }[self]

    def sign(self, channel: Channel) -> int:
        return self.signs[0 if channel is Channel.plus else 1]

    @property
    def letter(self) -> str:
        return {SheetId.I: "P", SheetId.II: "Q", SheetId.III: "R", SheetId.IV: "S"}[
            self
        ]

    @property
    def order(self) -> int:
        return list(SheetId).index(self)


class StateKind(str, Enum):
    bound = "bound"
    resonant = "resonant"
    antiresonant = "antiresonant"
    # real energy off sheet I: virtual states and states embedded in a band
    real_embedded = "real_embedded"


class Eigenstate(QbicBaseModel):
    """
    One discrete solution of the dispersion equation.

    Attributes
    ----------
    energy : complex
        Eigenvalue in units of t_h.
    k_plus, k_minus : complex
        Channel wave numbers with real parts in (-pi, pi].
    sheet : SheetId
    residual : float
        Modulus of the branch-resolved dispersion residual (or of the relative
        polynomial residual for edge-degenerate states).
    label : str, optional
        Table label such as ``Q2``; presentation only.
    kind : StateKind
    edge_degenerate : bool
        True when a wave number sits within ``EDGE_TOL`` of a band edge.
    provenance : str
        How the state was obtained: ``classified``, ``refined`` or ``conjugate``.
    iterations : int
        Newton iterations spent in refinement.
    """

    model_config = ConfigDict(frozen=True)

    energy: Complex
    k_plus: Complex
    k_minus: Complex
    sheet: SheetId
    residual: float = Field(ge=0.0)
    label: Optional[str] = None
    kind: StateKind
    edge_degenerate: bool = False
    provenance: str = "classified"
    iterations: int = 0

    @model_validator(mode="after")
    def validate_sheet_and_kind(self):
        plus, minus = self.sheet.signs
        for sign, k, name in ((plus, self.k_plus, "k_plus"), (minus, self.k_minus, "k_minus")):
            if k.imag != 0.0 and np.sign(k.imag) != sign:
                raise ValueError(
                    f"{name}={k} is inconsistent with sheet {self.sheet.value}"
                )
        if self.kind is StateKind.resonant and not self.energy.imag < 0:
            raise ValueError("resonant states need Im E < 0")
        if self.kind is StateKind.antiresonant and not self.energy.imag > 0:
            raise ValueError("antiresonant states need Im E > 0")
        if self.kind is StateKind.bound and (
            self.sheet is not SheetId.I or abs(self.energy.imag) >= REAL_AXIS_TOL
        ):
            raise ValueError("bound states must be real and on sheet I")
        return self

    def k(self, channel: Channel | str | int) -> complex:
        return self.k_plus if Channel.parse(channel) is Channel.plus else self.k_minus

    @property
    def decay_rate(self) -> float:
        """probability decay rate ``-2 Im E`` (hbar = 1)"""
        return -2.0 * self.energy.imag

    @property
    def name(self) -> str:
        return self.label or f"E={self.energy:.8f}"

    def conjugate(self) -> "Eigenstate":
        """time-reversed partner ``(conj E, -conj K+, -conj K-)`` on the same sheet"""
        kind = {
            StateKind.resonant: StateKind.antiresonant,
            StateKind.antiresonant: StateKind.resonant,
        }.get(self.kind, self.kind)
        return self.model_copy(
            update={
                "energy": self.energy.conjugate(),
                "k_plus": reduce_wave_number(-self.k_plus.conjugate()),
                "k_minus": reduce_wave_number(-self.k_minus.conjugate()),
                "kind": kind,
                "label": None,
                "provenance": "conjugate",
            }
        )


class OneChannelState(QbicBaseModel):
    """
    Bound state of a single channel coupled to the dot with strength g/sqrt(2).
    """

    model_config = ConfigDict(frozen=True)

    energy: float
    k: Complex
    channel: Channel
    residual: float = Field(ge=0.0)


def reduce_wave_number(k: complex) -> complex:
    """map the real part into (-pi, pi]"""
    re = np.pi - np.mod(np.pi - k.real, 2.0 * np.pi)
    return complex(re, k.imag)


def wave_number_distance(a: complex, b: complex) -> float:
    d = a - b
    re = np.mod(d.real + np.pi, 2.0 * np.pi) - np.pi
    return float(abs(complex(re, d.imag)))


def wave_numbers(
    params: ModelParams, z: complex
) -> tuple[tuple[complex, complex], tuple[complex, complex]]:
    """
    Both wave-number candidates ``K`` and ``-K`` of each channel.

    Solves ``cos K = -(z + s t'_h) / t_h`` with the complex arccosine.

    Returns
    -------
    tuple
        ``((K+, -K+), (K-, -K-))`` with real parts reduced into (-pi, pi].
    """
    z = complex(z)
    out = []
    for channel in CHANNELS:
        w = -(z + channel.sign * params.tp_h) / params.t_h
        k = complex(np.arccos(complex(w)))
        out.append((reduce_wave_number(k), reduce_wave_number(-k)))
    return out[0], out[1]


def channel_amplitude_factor(params: ModelParams, k: complex) -> complex:
    """``i t_h sin K``, the square root ``sqrt((z + s t'_h)^2 - t_h^2)`` on the branch of K"""
    return 1j * params.t_h * np.sin(k)


def branch_amplitude(params: ModelParams, z: complex, channel: Channel, k: complex) -> complex:
    """
    ``sqrt((z + s t'_h - t_h)(z + s t'_h + t_h))`` with the sign of ``i t_h sin K``.

    The factorised radicand keeps full relative accuracy next to the band edges,
    where ``sin(arccos(.))`` does not.
    """
    approx = channel_amplitude_factor(params, k)
    shifted = complex(z) + channel.sign * params.tp_h
    root = np.sqrt(complex((shifted - params.t_h) * (shifted + params.t_h)))
    if abs(root - approx) <= abs(root + approx):
        return complex(root)
    return complex(-root)


def self_energy(
    params: ModelParams, z: complex, k_plus: complex, k_minus: complex
) -> complex:
    """
    Branch-resolved level shift ``(g^2/2) sum_s 1/(i t_h sin K_s)``.

    The wave numbers select the branch of each square root; its modulus is
    taken from ``z``.
    """
    g2 = params.g**2
    with np.errstate(divide="ignore", invalid="ignore"):
        total = sum(
            1.0 / branch_amplitude(params, z, channel, k)
            for channel, k in zip(CHANNELS, (k_plus, k_minus))
        )
    return complex(0.5 * g2 * total)


def branch_residual(
    params: ModelParams, z: complex, k_plus: complex, k_minus: complex
) -> complex:
    """``z - E_d - self_energy``; zero exactly at an eigenvalue on the sheet of the K's"""
    return complex(z - params.e_d - self_energy(params, z, k_plus, k_minus))


def residual_derivative(
    params: ModelParams, z: complex, k_plus: complex, k_minus: complex
) -> complex:
    """``dR/dz = 1 + (g^2/2) sum_s (z + s t'_h) / (i t_h sin K_s)^3``"""
    total = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        for channel, k in zip(CHANNELS, (k_plus, k_minus)):
            s = branch_amplitude(params, z, channel, k)
            total += (z + channel.sign * params.tp_h) / s**3
    return complex(1.0 + 0.5 * params.g**2 * total)


def _kind(energy: complex, sheet: SheetId, real_tol: float = REAL_AXIS_TOL) -> StateKind:
    if abs(energy.imag) < real_tol:
        return StateKind.bound if sheet is SheetId.I else StateKind.real_embedded
    return StateKind.resonant if energy.imag < 0 else StateKind.antiresonant


def _is_edge(params: ModelParams, k_plus: complex, k_minus: complex, edge_tol: float) -> bool:
    return min(abs(np.sin(k_plus)), abs(np.sin(k_minus))) * params.t_h < edge_tol


def _branch_candidates(params: ModelParams, z: complex) -> list[tuple[float, complex, complex]]:
    """all four (|R|, K+, K-) combinations, smallest residual first"""
    kp_cands, km_cands = wave_numbers(params, z)
    combos = []
    for kp in kp_cands:
        for km in km_cands:
            res = abs(branch_residual(params, z, kp, km))
            combos.append((res if np.isfinite(res) else np.inf, kp, km))
    return sorted(combos, key=lambda c: c[0])


def _relative_poly_residual(poly: ComplexPoly, z: complex) -> float:
    return float(abs(poly(z)) / residual_bound(poly, z, 1.0))


def classify_root(
    params: ModelParams,
    z: complex,
    tol: float = CLASSIFY_TOL,
    on_cut_tol: float = ON_CUT_TOL,
    edge_tol: float = EDGE_TOL,
    real_tol: float = REAL_AXIS_TOL,
) -> Eigenstate:
    """
    Assign a polynomial root to its Riemann sheet.

    The branch-resolved residual is evaluated for the four combinations of
    wave-number candidates and the smallest one wins; the sheet follows from the
    signs of Im K+ and Im K-.

    Parameters
    ----------
    params : ModelParams
    z : complex
        A root of the dispersion polynomial.
    tol : float
        Largest acceptable Newton step ``|R / R'|`` over the combinations.
    on_cut_tol : float
        Wave numbers with ``|Im K|`` below this lie on a cut.
    edge_tol : float
        States with ``t_h |sin K|`` below this are edge-degenerate and are
        checked against the polynomial instead of the branch residual.
    real_tol : float
        ``|Im z|`` below this counts as real.

    Returns
    -------
    Eigenstate

    Raises
    ------
    SpuriousRootError
        If no branch combination comes within ``tol`` of a solution.
    OnCutError
        If the selected wave numbers have a vanishing imaginary part.
    """
    z = complex(z)
    combos = _branch_candidates(params, z)
    best_res, kp, km = combos[0]
    edge = _is_edge(params, kp, km, edge_tol)

    if edge:
        best_res = _relative_poly_residual(dispersion_polynomial(params), z)
        distance = best_res
    else:
        # Newton step length; near band edges |R'| is large and |R| alone overstates
        # the distance of an inaccurate root from the true eigenvalue
        distance = min(
            res / max(1.0, abs(residual_derivative(params, z, k1, k2)))
            for res, k1, k2 in combos
        )

    if not distance < tol:
        residuals = {}
        for res, k1, k2 in combos:
            residuals[SheetId.from_wave_numbers(k1, k2).value] = float(res)
        raise SpuriousRootError(z, residuals)

    for channel, k in zip(CHANNELS, (kp, km)):
        if abs(k.imag) < on_cut_tol:
            raise OnCutError(z, channel.value, kp, km)

    sheet = SheetId.from_wave_numbers(kp, km)
    logger.debug(f"root {z:.10f} -> sheet {sheet.value} (residual {best_res:.2e})")
    return Eigenstate(
        energy=z,
        k_plus=kp,
        k_minus=km,
        sheet=sheet,
        residual=float(best_res),
        kind=_kind(z, sheet, real_tol),
        edge_degenerate=edge,
        provenance="classified",
    )


def rounding_floor(z: complex, deriv: complex) -> float:
    """smallest |R| resolvable in double precision: one ulp of z times |R'|"""
    return float(8.0 * EPS * abs(deriv) * max(1.0, abs(z)))


def _continue_wave_number(params: ModelParams, channel: Channel, z: complex, previous: complex) -> complex:
    kp_cands, km_cands = wave_numbers(params, z)
    cands = kp_cands if channel is Channel.plus else km_cands
    return min(cands, key=lambda k: wave_number_distance(k, previous))


def newton_refine(
    params: ModelParams,
    state: Eigenstate,
    tol: float = REFINE_TOL,
    cut_tol: float = ON_CUT_TOL,
    max_iter: int = MAX_NEWTON_ITER,
    real_tol: float = REAL_AXIS_TOL,
) -> Eigenstate:
    """
    Newton iteration on the branch-resolved dispersion residual.

    The wave numbers are continued from one iterate to the next, so the branch of
    the input state is held fixed. A channel whose ``|Im K|`` exceeds ``cut_tol`` on
    input must keep the sign of Im K; channels at or below ``cut_tol`` are free and
    their sheet is read from the converged wave number.

    Parameters
    ----------
    params : ModelParams
    state : Eigenstate
        Starting state, typically from ``classify_root``.
    tol : float
        Target for ``|R|``. Near band edges ``|R'|`` is large and the iteration
        stops at the rounding floor ``8 eps |R'| max(1, |z|)`` when that exceeds
        ``tol``.
    cut_tol : float
        Threshold below which a channel's sheet is not pinned.
    max_iter : int
        Maximum number of Newton steps.
    real_tol : float
        ``|Im z|`` below this counts as real; such states are put on the real
        axis when that keeps the residual below ``tol``.

    Returns
    -------
    Eigenstate
        Refined state with provenance ``refined``.

    Raises
    ------
    NearCutError
        If a pinned channel changes the sign of Im K; carries the last iterate
        on the original sheet.
    ConvergenceError
        If ``|R|`` does not drop below ``tol`` within ``max_iter`` steps.
    """
    if not np.isfinite(state.residual):
        raise ValueError("state residual must be finite")

    if state.edge_degenerate:
        logger.debug(f"skipping refinement of edge-degenerate state {state.name}")
        return state

    pinned = {
        channel: int(np.sign(state.k(channel).imag))
        for channel in CHANNELS
        if abs(state.k(channel).imag) > cut_tol
    }

    z, kp, km = state.energy, state.k_plus, state.k_minus
    res = branch_residual(params, z, kp, km)
    last_good = state
    z_start, res_start = z, abs(res)
    deriv_start = abs(residual_derivative(params, z, kp, km))

    iteration = 0
    while True:
        deriv = residual_derivative(params, z, kp, km)
        floor = rounding_floor(z, deriv)
        if abs(res) < max(tol, floor):
            break
        if iteration >= max_iter:
            raise ConvergenceError(
                f"Newton refinement of {state.name} did not converge in {max_iter} steps",
                best=last_good,
                residual=float(abs(res)),
            )
        iteration += 1
        step = res / deriv

        # backtrack while the residual grows
        for _ in range(20):
            z_new = z - step
            kp_new = _continue_wave_number(params, Channel.plus, z_new, kp)
            km_new = _continue_wave_number(params, Channel.minus, z_new, km)
            res_new = branch_residual(params, z_new, kp_new, km_new)
            if np.isfinite(res_new) and abs(res_new) < abs(res):
                break
            step *= 0.5
        else:
            if abs(res) < STALL_FACTOR * floor:
                logger.debug(f"refinement of {state.name} stopped at rounding level |R|={abs(res):.3e}")
                break
            raise ConvergenceError(
                f"Newton refinement of {state.name} stalled at |R|={abs(res):.3e}",
                best=last_good,
                residual=float(abs(res)),
            )

        for channel, k in ((Channel.plus, kp_new), (Channel.minus, km_new)):
            if channel in pinned and np.sign(k.imag) != pinned[channel]:
                raise NearCutError(
                    f"refinement of {state.name} crossed the {channel.value} channel cut "
                    f"at z={z_new}",
                    last_state=last_good,
                )

        z, kp, km, res = z_new, kp_new, km_new, res_new
        sheet = SheetId.from_wave_numbers(kp, km)
        last_good = Eigenstate(
            energy=z,
            k_plus=kp,
            k_minus=km,
            sheet=sheet,
            residual=float(abs(res)),
            kind=_kind(z, sheet, real_tol),
            provenance="refined",
            iterations=iteration,
        )

    if 0.0 < abs(z.imag) < real_tol:
        z_real = complex(z.real, 0.0)
        kp_r = _continue_wave_number(params, Channel.plus, z_real, kp)
        km_r = _continue_wave_number(params, Channel.minus, z_real, km)
        res_r = branch_residual(params, z_real, kp_r, km_r)
        on_cut = min(abs(kp_r.imag), abs(km_r.imag)) <= cut_tol
        floor_r = rounding_floor(z_real, residual_derivative(params, z_real, kp_r, km_r))
        if abs(res_r) < max(tol, floor_r) and not on_cut:
            z, kp, km, res = z_real, kp_r, km_r, res_r

    if deriv_start > 0 and abs(z - z_start) > 10.0 * res_start / deriv_start + tol:
        logger.debug(
            f"refinement of {state.name} moved {abs(z - z_start):.2e}, "
            f"beyond the linear estimate {res_start / deriv_start:.2e}"
        )

    sheet = SheetId.from_wave_numbers(kp, km)
    return Eigenstate(
        energy=z,
        k_plus=kp,
        k_minus=km,
        sheet=sheet,
        residual=float(abs(res)),
        label=state.label,
        kind=_kind(z, sheet, real_tol),
        edge_degenerate=_is_edge(params, kp, km, EDGE_TOL),
        provenance="refined",
        iterations=iteration,
    )


def _same_state(a: Eigenstate, b: Eigenstate, radius: float = DUPLICATE_RADIUS) -> bool:
    scale = max(1.0, abs(a.energy))
    return (
        abs(a.energy - b.energy) <= radius * scale
        and wave_number_distance(a.k_plus, b.k_plus) <= radius
        and wave_number_distance(a.k_minus, b.k_minus) <= radius
    )


def _seed_state(params: ModelParams, z: complex, kp: complex, km: complex, residual: float) -> Eigenstate:
    sheet = SheetId.from_wave_numbers(kp, km)
    return Eigenstate(
        energy=z,
        k_plus=kp,
        k_minus=km,
        sheet=sheet,
        residual=float(residual) if np.isfinite(residual) else 0.0,
        kind=_kind(z, sheet),
        edge_degenerate=_is_edge(params, kp, km, EDGE_TOL),
    )


def _table_order(states: list[Eigenstate], group_tol: float = 1e-8) -> list[Eigenstate]:
    """
    Order of the eigenvalue table: by sheet, then by decreasing |Re E|, with
    conjugate partners adjacent and the decaying member first.
    """
    ordered = []
    for sheet in SheetId:
        members = sorted(
            (s for s in states if s.sheet is sheet), key=lambda s: -abs(s.energy.real)
        )
        groups: list[list[Eigenstate]] = []
        for s in members:
            if groups and abs(abs(groups[-1][0].energy.real) - abs(s.energy.real)) < group_tol:
                groups[-1].append(s)
            else:
                groups.append([s])
        for group in groups:
            ordered.extend(sorted(group, key=lambda s: (s.energy.imag, -s.energy.real)))
    return ordered


def assign_labels(states: list[Eigenstate]) -> list[Eigenstate]:
    """label states P1, P2, Q1, ... per sheet in table order"""
    counters = {sheet: 0 for sheet in SheetId}
    labelled = []
    for state in _table_order(states):
        counters[state.sheet] += 1
        label = f"{state.sheet.letter}{counters[state.sheet]}"
        labelled.append(state.model_copy(update={"label": label}))
    return labelled


def _first_new_state(
    params: ModelParams,
    seeds: list[Eigenstate],
    found: list[Eigenstate],
    refine_tol: float,
    real_tol: float,
) -> Optional[Eigenstate]:
    """refine ``seeds`` in order and return the first result not already in ``found``"""
    for seed in seeds:
        try:
            refined = newton_refine(
                params, seed, tol=refine_tol, cut_tol=SEED_CUT_TOL, real_tol=real_tol
            )
        except (NearCutError, ConvergenceError) as err:
            logger.debug(f"seed at {seed.energy:.10f} on sheet {seed.sheet.value} failed: {err}")
            continue
        if any(_same_state(refined, s) for s in found):
            logger.debug(f"seed at {seed.energy:.10f} reproduced a known state")
            continue
        return refined
    return None


def _root_seeds(
    params: ModelParams, z0: complex, classify_tol: float, real_tol: float
) -> list[Eigenstate]:
    """the classified state of a root first, then its other branch combinations"""
    seeds = []
    try:
        seeds.append(classify_root(params, z0, tol=classify_tol, real_tol=real_tol))
    except OnCutError as err:
        seeds.append(_seed_state(params, z0, err.k_plus, err.k_minus, 0.0))
    except SpuriousRootError as err:
        # clustered roots lose accuracy in the polynomial but not on the sheets
        logger.debug(f"root {z0:.10f} fits no sheet ({err}), refining all branches")

    for res, kp, km in _branch_candidates(params, z0):
        if not any(
            wave_number_distance(kp, s.k_plus) < 1e-15
            and wave_number_distance(km, s.k_minus) < 1e-15
            for s in seeds
        ):
            seeds.append(_seed_state(params, z0, kp, km, res))
    return seeds


def dot_seeds(params: ModelParams) -> list[Eigenstate]:
    """
    Weak-coupling estimates ``E_d + (g^2/2)(+-1/s+ +- 1/s-)`` of the states that
    grow out of the dot level, one per branch combination at ``E_d``.
    """
    seeds = []
    kp_cands, km_cands = wave_numbers(params, params.e_d)
    for kp0 in kp_cands:
        for km0 in km_cands:
            shift = self_energy(params, params.e_d, kp0, km0)
            if not np.isfinite(shift):
                continue
            z = complex(params.e_d + shift)
            kp = _continue_wave_number(params, Channel.plus, z, kp0)
            km = _continue_wave_number(params, Channel.minus, z, km0)
            res = abs(branch_residual(params, z, kp, km))
            seeds.append(_seed_state(params, z, kp, km, res))
    return seeds


def _complete_conjugates(found: list[Eigenstate]) -> None:
    for state in list(found):
        partner = state.conjugate()
        if not any(_same_state(partner, s) for s in found):
            logger.info(f"adding time-reversed partner of state at {state.energy:.10f}")
            found.append(partner)


def solve_spectrum(
    params: ModelParams,
    poly_tol: float = 1e-13,
    max_iter: int = 200,
    cluster_radius: float = 1e-9,
    classify_tol: float = CLASSIFY_TOL,
    refine_tol: float = REFINE_TOL,
    real_tol: float = REAL_AXIS_TOL,
) -> list[Eigenstate]:
    """
    All twelve discrete eigenstates of the model.

    Roots of the dispersion polynomial are classified onto their sheets and
    refined with Newton's method on the branch-resolved equation. A root whose
    refinement lands on an already found state, or that fits no sheet, is
    retried on every branch combination; time-reversed partners missing from the
    set are added from the conjugation symmetry of the spectrum. If states are
    still missing, which happens when the dot level sits outside both bands and
    its four states crowd within ``g^2`` of ``E_d``, the weak-coupling estimates
    of ``dot_seeds`` are refined as well.

    Parameters
    ----------
    params : ModelParams
        Requires ``g > 0``.

    Returns
    -------
    list of Eigenstate
        Twelve labelled states ordered by sheet and label.

    Raises
    ------
    ValueError
        If ``g == 0``.
    SpectrumStructureError
        If the number of distinct states is not twelve.
    """
    if not params.g > 0:
        raise ValueError("solve_spectrum requires g > 0; use find_roots for g = 0")

    roots = find_roots(
        dispersion_polynomial(params), tol=poly_tol, max_iter=max_iter, cluster_radius=cluster_radius
    )

    found: list[Eigenstate] = []
    for z0 in sorted(roots.roots, key=lambda z: (z.real, z.imag)):
        seeds = _root_seeds(params, z0, classify_tol, real_tol)
        state = _first_new_state(params, seeds, found, refine_tol, real_tol)
        if state is None:
            logger.info(f"root {z0:.10f} did not yield a new state")
        else:
            found.append(state)
    _complete_conjugates(found)

    if len(found) < N_STATES:
        logger.info(f"{len(found)} states from the polynomial, seeding from the dot level")
        for seed in dot_seeds(params):
            state = _first_new_state(params, [seed], found, refine_tol, real_tol)
            if state is not None:
                found.append(state)
        _complete_conjugates(found)

    if len(found) != N_STATES:
        energies = ", ".join(f"{s.energy:.8f}({s.sheet.value})" for s in found)
        raise SpectrumStructureError(
            f"expected {N_STATES} distinct eigenstates for {params}, found {len(found)}: "
            f"{energies}"
        )

    return assign_labels(found)


def spectrum_frame(states: list[Eigenstate]) -> pd.DataFrame:
    """eigenvalue table with complex quantities split into re_/im_ columns"""
    rows = []
    for s in states:
        rows.append(
            {
                "label": s.label,
                "re_e": s.energy.real,
                "im_e": s.energy.imag,
                "re_k_plus": s.k_plus.real,
                "im_k_plus": s.k_plus.imag,
                "re_k_minus": s.k_minus.real,
                "im_k_minus": s.k_minus.imag,
                "sheet": s.sheet.value,
                "kind": s.kind.value,
                "residual": s.residual,
            }
        )
    return pd.DataFrame(rows)


def find_state(states: list[Eigenstate], label: str) -> Eigenstate:
    for s in states:
        if s.label == label:
            return s
    valid = ", ".join(s.label for s in states if s.label)
    raise KeyError(f"no state labelled {label!r}; valid labels: {valid}")


def one_channel_residual(params: ModelParams, channel: Channel, z: complex, k: complex) -> complex:
    """``z - E_d - (g^2/2) / (i t_h sin K)`` for one channel"""
    return complex(z - params.e_d - 0.5 * params.g**2 / branch_amplitude(params, z, channel, k))


def _bound_wave_number(params: ModelParams, channel: Channel, z: float) -> complex:
    kp_cands, km_cands = wave_numbers(params, z)
    cands = kp_cands if channel is Channel.plus else km_cands
    return max(cands, key=lambda k: k.imag)


def solve_one_channel(
    params: ModelParams,
    channel: Channel | str | int,
    tol: float = REFINE_TOL,
    max_iter: int = MAX_NEWTON_ITER,
) -> list[OneChannelState]:
    """
    Bound states of one channel coupled alone to the dot.

    The equation ``z - E_d - (g^2/2) / sqrt((z +/- t'_h)^2 - t_h^2) = 0`` is taken on
    the bound-state branch (``Im K > 0``). It is squared to the quartic
    ``(z - E_d)^2 ((z +/- t'_h)^2 - t_h^2) - g^4/4``; real roots outside the band are
    polished on the unsquared equation and kept when the residual is below ``tol``.

    Parameters
    ----------
    params : ModelParams
        Requires ``g > 0``.
    channel : Channel

    Returns
    -------
    list of OneChannelState
        Bound states sorted by energy; empty when none exists.
    """
    channel = Channel.parse(channel)
    if not params.g > 0:
        raise ValueError("solve_one_channel requires g > 0")

    t, shift = params.t_h, channel.sign * params.tp_h
    a = ComplexPoly(coeffs=[-params.e_d, 1.0])
    b = ComplexPoly(coeffs=[shift**2 - t**2, 2.0 * shift, 1.0])
    quartic = a * a * b - 0.25 * params.g**4
    roots = find_roots(quartic)

    lo, hi = band_edges(params).band(channel)
    states = []
    for z0 in roots.roots:
        if abs(z0.imag) > 1e-6 * max(1.0, abs(z0)):
            continue
        z = float(z0.real)
        if lo <= z <= hi:
            continue
        for _ in range(max_iter):
            k = _bound_wave_number(params, channel, z)
            res = one_channel_residual(params, channel, z, k)
            s = branch_amplitude(params, z, channel, k)
            deriv = 1.0 + 0.5 * params.g**2 * (z + shift) / s**3
            if abs(res) < max(tol, rounding_floor(z, deriv)):
                break
            z_new = float((z - res / deriv).real)
            # stay outside the band
            if lo <= z_new <= hi:
                z_new = 0.5 * (z + (lo if z < lo else hi))
            z = z_new
        k = _bound_wave_number(params, channel, z)
        res = abs(one_channel_residual(params, channel, z, k))
        s = branch_amplitude(params, z, channel, k)
        floor = rounding_floor(z, 1.0 + 0.5 * params.g**2 * (z + shift) / s**3)
        if res < max(tol, STALL_FACTOR * floor) and not any(abs(z - s.energy) < 1e-10 for s in states):
            states.append(OneChannelState(energy=z, k=k, channel=channel, residual=res))

    logger.debug(f"one-channel {channel.value}: {len(states)} bound states")
    return sorted(states, key=lambda s: s.energy)
