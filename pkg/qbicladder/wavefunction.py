"""
Spatial eigenfunctions on the ladder.

In the channel basis an eigenstate reads ``psi(x, s) = A_s exp(i K_s |x|)`` with the
dot amplitude tied to the channel amplitudes by the matching condition
``A_s (i t_h sin K_s) = (g / sqrt(2)) psi(d)``. The legs are recovered from
``psi(x, 1) = (psi(x, +) + psi(x, -)) / sqrt(2)`` and
``psi(x, 2) = (psi(x, +) - psi(x, -)) / sqrt(2)``.
"""

import logging
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import ConfigDict, Field, model_validator

from qbicladder.errors import EdgeStateError
from qbicladder.model import CHANNELS, Channel, ModelParams
from qbicladder.pydantic import Complex, QbicBaseModel
from qbicladder.spectrum import CLASSIFY_TOL, Eigenstate, branch_amplitude

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)
EDGE_PROFILE_TOL = 1e-12
MODULUS_FLOOR = 1e-300


class Normalization(str, Enum):
    dot_unity = "dot_unity"
    max_unity = "max_unity"


class ProfileSample(QbicBaseModel):
    model_config = ConfigDict(frozen=True)

    x: int
    psi_plus: Complex
    psi_minus: Complex
    psi_leg1: Complex
    psi_leg2: Complex


class WavefunctionProfile(QbicBaseModel):
    """
    Eigenfunction of one state sampled on a contiguous range of integer sites.

    Attributes
    ----------
    state : Eigenstate
    a_plus, a_minus : complex
        Channel amplitudes at the origin.
    psi_dot : complex
        Amplitude on the dot.
    x : list of int
        Sample sites, increasing and contiguous.
    psi_plus, psi_minus : list of complex
        Channel-basis amplitudes at each site.
    psi_leg1, psi_leg2 : list of complex
        Leg-basis amplitudes at each site.
    normalization : Normalization
    """

    model_config = ConfigDict(frozen=True)

    state: Eigenstate
    a_plus: Complex
    a_minus: Complex
    psi_dot: Complex
    x: list[int]
    psi_plus: list[Complex]
    psi_minus: list[Complex]
    psi_leg1: list[Complex]
    psi_leg2: list[Complex]
    normalization: Normalization = Normalization.dot_unity

    @model_validator(mode="after")
    def validate_samples(self):
        n = len(self.x)
        for name in ("psi_plus", "psi_minus", "psi_leg1", "psi_leg2"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per site")
        if n > 1 and np.any(np.diff(self.x) != 1):
            raise ValueError("sample sites must be contiguous and increasing")
        return self

    def amplitude(self, channel: Channel | str | int) -> complex:
        return self.a_plus if Channel.parse(channel) is Channel.plus else self.a_minus

    def channel_values(self, channel: Channel | str | int) -> np.ndarray:
        values = self.psi_plus if Channel.parse(channel) is Channel.plus else self.psi_minus
        return np.asarray(values, dtype=complex)

    def samples(self) -> list[ProfileSample]:
        return [
            ProfileSample(x=x, psi_plus=p, psi_minus=m, psi_leg1=l1, psi_leg2=l2)
            for x, p, m, l1, l2 in zip(
                self.x, self.psi_plus, self.psi_minus, self.psi_leg1, self.psi_leg2
            )
        ]

    def value_at(self, x: int, channel: Channel | str | int) -> complex:
        try:
            idx = self.x.index(x)
        except ValueError:
            raise KeyError(f"site {x} is outside the sampled range") from None
        return complex(self.channel_values(channel)[idx])

    def moduli_frame(self) -> pd.DataFrame:
        """moduli for plotting, floored so log scales stay finite"""
        return pd.DataFrame(
            {
                "x": self.x,
                "abs_psi_leg1": np.maximum(np.abs(self.psi_leg1), MODULUS_FLOOR),
                "abs_psi_leg2": np.maximum(np.abs(self.psi_leg2), MODULUS_FLOOR),
                "abs_psi_plus": np.maximum(np.abs(self.psi_plus), MODULUS_FLOOR),
                "abs_psi_minus": np.maximum(np.abs(self.psi_minus), MODULUS_FLOOR),
            }
        )


def channel_to_legs(psi_plus, psi_minus) -> tuple[np.ndarray, np.ndarray]:
    psi_plus = np.asarray(psi_plus, dtype=complex)
    psi_minus = np.asarray(psi_minus, dtype=complex)
    return (psi_plus + psi_minus) / SQRT2, (psi_plus - psi_minus) / SQRT2


def legs_to_channel(psi_leg1, psi_leg2) -> tuple[np.ndarray, np.ndarray]:
    psi_leg1 = np.asarray(psi_leg1, dtype=complex)
    psi_leg2 = np.asarray(psi_leg2, dtype=complex)
    return (psi_leg1 + psi_leg2) / SQRT2, (psi_leg1 - psi_leg2) / SQRT2


def matching_amplitudes(params: ModelParams, state: Eigenstate, psi_dot: complex = 1.0) -> tuple[complex, complex]:
    """
    Channel amplitudes ``A_s = g psi(d) / (sqrt(2) i t_h sin K_s)``.

    ``i t_h sin K_s`` is taken from ``branch_amplitude`` so the amplitudes keep
    full accuracy next to a band edge.

    Raises
    ------
    EdgeStateError
        If a wave number sits on a band edge, where the profile is not defined.
    """
    out = []
    for channel in CHANNELS:
        sin_k = np.sin(state.k(channel))
        if abs(sin_k) < EDGE_PROFILE_TOL:
            raise EdgeStateError(
                f"edge state {state.name} has no normalizable profile "
                f"(|sin K{channel.value}| = {abs(sin_k):.2e})"
            )
        s = branch_amplitude(params, state.energy, channel, state.k(channel))
        out.append(complex(params.g * psi_dot / (SQRT2 * s)))
    return out[0], out[1]


def build_profile(
    params: ModelParams,
    state: Eigenstate,
    x_range: tuple[int, int] = (-100, 100),
    normalization: Normalization | str = Normalization.dot_unity,
) -> WavefunctionProfile:
    """
    Sample the eigenfunction of ``state`` on the sites ``x_range[0] .. x_range[1]``.

    Parameters
    ----------
    params : ModelParams
    state : Eigenstate
    x_range : tuple of int
        Inclusive site range.
    normalization : Normalization
        ``dot_unity`` sets ``psi(d) = 1``; ``max_unity`` rescales so the largest
        sampled modulus (dot included) is one.

    Returns
    -------
    WavefunctionProfile
    """
    normalization = Normalization(normalization)
    lo, hi = int(x_range[0]), int(x_range[1])
    if hi < lo:
        raise ValueError(f"x_range must be increasing, got {x_range}")
    if not state.residual < CLASSIFY_TOL:
        raise ValueError(
            f"state {state.name} has residual {state.residual:.2e}, refine it first"
        )

    a_plus, a_minus = matching_amplitudes(params, state, 1.0)
    x = np.arange(lo, hi + 1)
    psi_plus = a_plus * np.exp(1j * state.k_plus * np.abs(x))
    psi_minus = a_minus * np.exp(1j * state.k_minus * np.abs(x))
    psi_dot = 1.0 + 0.0j

    if normalization is Normalization.max_unity:
        peak = max(
            1.0, float(np.max(np.abs(psi_plus))), float(np.max(np.abs(psi_minus)))
        )
        psi_plus, psi_minus = psi_plus / peak, psi_minus / peak
        a_plus, a_minus, psi_dot = a_plus / peak, a_minus / peak, psi_dot / peak

    leg1, leg2 = channel_to_legs(psi_plus, psi_minus)
    logger.debug(
        f"profile of {state.name}: |A+|={abs(a_plus):.3e} |A-|={abs(a_minus):.3e} "
        f"|psi_d|={abs(psi_dot):.3e}"
    )
    return WavefunctionProfile(
        state=state,
        a_plus=a_plus,
        a_minus=a_minus,
        psi_dot=psi_dot,
        x=x.tolist(),
        psi_plus=psi_plus.tolist(),
        psi_minus=psi_minus.tolist(),
        psi_leg1=leg1.tolist(),
        psi_leg2=leg2.tolist(),
        normalization=normalization,
    )


def matching_residual(params: ModelParams, profile: WavefunctionProfile) -> float:
    """largest ``|A_s i t_h sin K_s - (g/sqrt(2)) psi(d)|`` over both channels"""
    return max(
        abs(
            profile.amplitude(c) * 1j * params.t_h * np.sin(profile.state.k(c))
            - params.g / SQRT2 * profile.psi_dot
        )
        for c in CHANNELS
    )


def verify_schroedinger(params: ModelParams, profile: WavefunctionProfile) -> float:
    """
    Residual of the lattice eigenvalue equation in the channel basis.

    Checked at every interior sample; the origin row includes the dot coupling
    and the dot row is checked separately. The result is relative to the largest
    sampled modulus.
    """
    x = np.asarray(profile.x)
    if x.size < 3 or x[0] > -2 or x[-1] < 2:
        raise ValueError("profile must cover at least x in [-2, 2]")

    energy = profile.state.energy
    coupling = params.g / SQRT2
    worst = 0.0
    values = {c: profile.channel_values(c) for c in CHANNELS}
    origin = int(np.flatnonzero(x == 0)[0])

    for channel in CHANNELS:
        psi = values[channel]
        lhs = energy * psi[1:-1]
        rhs = (
            -0.5 * params.t_h * (psi[2:] + psi[:-2])
            + params.channel_offset(channel) * psi[1:-1]
        )
        rhs[origin - 1] += coupling * profile.psi_dot
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))

    dot_row = energy * profile.psi_dot - (
        params.e_d * profile.psi_dot
        + coupling * (values[Channel.plus][origin] + values[Channel.minus][origin])
    )
    worst = max(worst, abs(dot_row))

    scale = max(
        abs(profile.psi_dot), *(float(np.max(np.abs(v))) for v in values.values())
    )
    return worst / scale


class DivergenceReport(QbicBaseModel):
    """
    Spatial growth per channel of a sampled profile.

    ``growth_rates`` are fitted slopes of ``log|psi|`` versus ``|x|`` over the outer
    half of the range; they equal ``-Im K``. ``growing_channels`` lists the channels
    with ``Im K < 0``.
    """

    model_config = ConfigDict(frozen=True)

    growth_rates: dict[Channel, float]
    expected_rates: dict[Channel, float]
    growing_channels: list[Channel]

    @property
    def growing_channel(self) -> Optional[Channel]:
        """the single growing channel, None when zero or both grow"""
        if len(self.growing_channels) == 1:
            return self.growing_channels[0]
        return None


def spatial_divergence_report(profile: WavefunctionProfile) -> DivergenceReport:
    x = np.abs(np.asarray(profile.x))
    if x.max() < 50:
        raise ValueError("spatial divergence needs samples out to |x| >= 50")

    outer = x >= 0.5 * x.max()
    rates, expected, growing = {}, {}, []
    for channel in CHANNELS:
        modulus = np.maximum(np.abs(profile.channel_values(channel)[outer]), MODULUS_FLOOR)
        slope = np.polyfit(x[outer], np.log(modulus), 1)[0]
        rates[channel] = float(slope)
        k_imag = profile.state.k(channel).imag
        expected[channel] = -k_imag
        if k_imag < 0:
            growing.append(channel)
    return DivergenceReport(
        growth_rates=rates, expected_rates=expected, growing_channels=growing
    )
