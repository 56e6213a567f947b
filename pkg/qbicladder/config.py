"""
Run configuration: numeric tolerances and the settings shared by every command.
"""

import logging
import os.path
from enum import Enum
from typing import Any, Optional

import yaml
from pydantic import ConfigDict, Field

from qbicladder.dynamics import NORM_DRIFT_TOL
from qbicladder.model import ModelParams
from qbicladder.pydantic import QbicBaseModel, remove_none_values
from qbicladder.spectrum import (
    CLASSIFY_TOL,
    EDGE_TOL,
    ON_CUT_TOL,
    REAL_AXIS_TOL,
    REFINE_TOL,
)
from qbicladder.sweep import CONTINUITY_FLOOR

logger = logging.getLogger(__name__)

# flat keys of a --config file and the nested fields they set
FLAT_KEYS = {
    "th": ("params", "t_h"),
    "tp": ("params", "tp_h"),
    "g": ("params", "g"),
    "ed": ("params", "e_d"),
    "format": ("output_format",),
    "out": ("output_path",),
    "tol": ("tolerances", "refine"),
}


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


class Tolerances(QbicBaseModel):
    """
    Numeric tolerances of the solver pipeline, in units of t_h where dimensional.
    """

    model_config = ConfigDict(frozen=True)

    polish: float = Field(1e-13, gt=0.0, description="relative polynomial residual bound")
    max_iter: int = Field(200, ge=1, description="maximum root-finder sweeps")
    cluster_radius: float = Field(1e-9, gt=0.0, description="root cluster radius")
    classify: float = Field(CLASSIFY_TOL, gt=0.0, description="largest branch residual of a root")
    refine: float = Field(REFINE_TOL, gt=0.0, description="Newton refinement target")
    real_axis: float = Field(REAL_AXIS_TOL, gt=0.0, description="|Im E| treated as real")
    on_cut: float = Field(ON_CUT_TOL, gt=0.0, description="|Im K| treated as on a cut")
    edge: float = Field(EDGE_TOL, gt=0.0, description="t_h |sin K| treated as a band edge")
    continuity_floor: float = Field(
        CONTINUITY_FLOOR, gt=0.0, description="smallest track continuity radius"
    )
    norm_drift: float = Field(NORM_DRIFT_TOL, gt=0.0, description="time evolution drift bound")

    def solve_kwargs(self) -> dict[str, Any]:
        return {
            "poly_tol": self.polish,
            "max_iter": self.max_iter,
            "cluster_radius": self.cluster_radius,
            "classify_tol": self.classify,
            "refine_tol": self.refine,
            "real_tol": self.real_axis,
        }


class RunConfig(QbicBaseModel):
    """
    Settings of one command line run.

    Attributes
    ----------
    params : ModelParams
    output_format : OutputFormat
    output_path : str, optional
        Destination file; standard output when unset.
    tolerances : Tolerances
    seedless : bool
        Informational: every computation is deterministic.
    """

    params: ModelParams = Field(default_factory=ModelParams)
    output_format: OutputFormat = OutputFormat.csv
    output_path: Optional[str] = None
    tolerances: Tolerances = Field(default_factory=Tolerances)
    seedless: bool = True

    @classmethod
    def from_file(cls, filename: str, overrides: Optional[dict] = None):
        """
        Load a YAML file, nested like this model or flat like the command line
        flags; ``overrides`` (nested) take precedence over file values.
        """
        if not os.path.exists(filename):
            raise OSError(f"file {filename} is not found")

        with open(filename, "r") as f:
            config = yaml.safe_load(f) or {}
        if not isinstance(config, dict):
            raise ValueError(f"config file {filename} must hold a mapping")

        config = flat_to_nested(remove_none_values(config))
        if overrides:
            config = merge_dicts(config, overrides)
        return cls.from_dict(config)


def flat_to_nested(config: dict) -> dict:
    """translate flag-style keys (``tp: 0.345``) into the nested layout"""
    nested: dict = {}
    for key, value in config.items():
        path = FLAT_KEYS.get(key, (key,))
        if len(path) == 1 and isinstance(value, dict):
            nested = merge_dicts(nested, {path[0]: value})
            continue
        branch: dict = {}
        cursor = branch
        for part in path[:-1]:
            cursor[part] = {}
            cursor = cursor[part]
        cursor[path[-1]] = value
        nested = merge_dicts(nested, branch)
    return nested


def merge_dicts(dict1: dict, dict2: dict) -> dict:
    """
    Nested merge with the values of ``dict2`` taking precedence.
    """
    result = dict1.copy()
    for key, value in dict2.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = merge_dicts(result[key], value)
        else:
            result[key] = value
    return result
