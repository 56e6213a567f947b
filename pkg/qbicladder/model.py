"""
Ladder-with-adatom model: physical parameters, channel bands and densities of
states.

The two legs of the ladder combine into a symmetric (+) and an antisymmetric (-)
channel. Channel sigma carries the cosine band ``-t_h cos k - sigma t'_h``; the dot
couples to site ``x = 0`` of both channels with strength ``g / sqrt(2)``. All
energies are in units of ``t_h`` and hbar = 1.
"""

import logging
from enum import Enum
from typing import Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import ConfigDict, Field, model_validator

from qbicladder.errors import BandDomainError
from qbicladder.pydantic import QbicBaseModel

logger = logging.getLogger(__name__)


class Channel(str, Enum):
    plus = "+"
    minus = "-"

    @property
    def sign(self) -> int:
        return 1 if self is Channel.plus else -1

    @classmethod
    def parse(cls, value: Union["Channel", str, int]) -> "Channel":
        if isinstance(value, Channel):
            return value
        if isinstance(value, (int, np.integer)):
            if value not in (1, -1):
                raise ValueError(f"channel sign must be +1 or -1, got {value}")
            return cls.plus if value > 0 else cls.minus
        aliases = {"+": cls.plus, "plus": cls.plus, "-": cls.minus, "minus": cls.minus}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ValueError(f"unknown channel {value!r}") from None


CHANNELS = (Channel.plus, Channel.minus)


class BandEdges(QbicBaseModel):
    """
    Band edges of both ladder channels.

    Attributes
    ----------
    lower_band : tuple of float
        (min, max) of the + channel band, ``(-t_h - t'_h, t_h - t'_h)``.
    upper_band : tuple of float
        (min, max) of the - channel band, ``(-t_h + t'_h, t_h + t'_h)``.
    overlapping : bool
        True when the two bands overlap, i.e. ``|t'_h| < |t_h|``.
    """

    model_config = ConfigDict(frozen=True)

    lower_band: tuple[float, float] = Field(description="+ channel band (min, max)")
    upper_band: tuple[float, float] = Field(description="- channel band (min, max)")
    overlapping: bool = Field(description="whether the two bands overlap")

    @model_validator(mode="after")
    def validate_ordering(self):
        for name in ("lower_band", "upper_band"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy min < max, got ({lo}, {hi})")
        return self

    def band(self, channel: Channel | str | int) -> tuple[float, float]:
        channel = Channel.parse(channel)
        return self.lower_band if channel is Channel.plus else self.upper_band

    def contains(self, channel: Channel | str | int, e: float) -> bool:
        """strict interior test"""
        lo, hi = self.band(channel)
        return lo < e < hi

    def all_edges(self) -> list[float]:
        return sorted([*self.lower_band, *self.upper_band])


class ModelParams(QbicBaseModel):
    """
    Physical parameters of the ladder-with-adatom Hamiltonian.

    Attributes
    ----------
    t_h : float
        Hopping along the legs; the unit of energy (> 0).
    tp_h : float
        Rung hopping t'_h.
    g : float
        Dot-lattice coupling (>= 0).
    e_d : float
        Dot level E_d.
    """

    model_config = ConfigDict(frozen=True)

    t_h: float = Field(1.0, gt=0.0, description="leg hopping, unit of energy")
    tp_h: float = Field(0.345, description="rung hopping t'_h")
    g: float = Field(0.1, ge=0.0, description="dot-lattice coupling")
    e_d: float = Field(0.3, description="dot level E_d")

    @property
    def overlapping(self) -> bool:
        return abs(self.tp_h) < abs(self.t_h)

    @property
    def band_edges(self) -> BandEdges:
        return band_edges(self)

    def replace(self, **changes) -> "ModelParams":
        return type(self).model_validate({**self.model_dump(), **changes})

    def reflected(self) -> "ModelParams":
        """parameters with E_d -> -E_d; the spectrum maps to its negation"""
        return self.replace(e_d=-self.e_d)

    def channel_offset(self, channel: Channel | str | int) -> float:
        """on-site energy shift of a channel, ``-sigma t'_h``"""
        return -Channel.parse(channel).sign * self.tp_h


def band_energy(
    params: ModelParams, channel: Channel | str | int, k: ArrayLike
) -> Union[float, np.ndarray]:
    """
    Channel dispersion ``-t_h cos k -/+ t'_h`` (+ channel gets ``-t'_h``).

    Works element-wise on arrays of wave numbers.
    """
    channel = Channel.parse(channel)
    result = -params.t_h * np.cos(k) + params.channel_offset(channel)
    if np.ndim(result) == 0:
        return float(result)
    return result


def band_edges(params: ModelParams) -> BandEdges:
    t, tp = params.t_h, params.tp_h
    return BandEdges(
        lower_band=(-t - tp, t - tp),
        upper_band=(-t + tp, t + tp),
        overlapping=params.overlapping,
    )


def density_of_states(
    params: ModelParams, channel: Channel | str | int, e: ArrayLike
) -> Union[float, np.ndarray]:
    """
    One-dimensional density of states of a channel.

    Parameters
    ----------
    params : ModelParams
    channel : Channel
    e : float or array
        Energies strictly inside the channel band.

    Returns
    -------
    float or np.ndarray
        ``1 / (pi sqrt(t_h^2 - (e +/- t'_h)^2))``, diverging at the band edges.

    Raises
    ------
    BandDomainError
        If any energy is outside the open band.
    """
    channel = Channel.parse(channel)
    e_arr = np.asarray(e, dtype=float)
    shifted = e_arr - params.channel_offset(channel)
    radicand = params.t_h**2 - shifted**2
    if np.any(radicand <= 0.0):
        bad = e_arr[radicand <= 0.0] if e_arr.ndim else e_arr
        raise BandDomainError(
            channel.value, float(np.ravel(bad)[0]), band_edges(params).band(channel)
        )
    result = 1.0 / (np.pi * np.sqrt(radicand))
    if result.ndim == 0:
        return float(result)
    return result
