from qbicladder.model import Channel, ModelParams, band_edges
from qbicladder.spectrum import (
    Eigenstate,
    SheetId,
    find_state,
    solve_one_channel,
    solve_spectrum,
)
from qbicladder.sweep import fit_g_scaling, sweep_parameter
from qbicladder.wavefunction import WavefunctionProfile, build_profile


__all__ = [
    "ModelParams",
    "Channel",
    "Eigenstate",
    "SheetId",
    "WavefunctionProfile",
    "band_edges",
    "solve_spectrum",
    "solve_one_channel",
    "find_state",
    "build_profile",
    "sweep_parameter",
    "fit_g_scaling",
]

try:
    from ._version import __version__
except ImportError:
    __version__ = "0.0.0"

from qbicladder.log import configure_logger


def output_notebook(**kwargs):
    """
    Send package log records to stdout; keyword arguments go to configure_logger.
    """
    configure_logger(**kwargs)
