import json
import logging
from typing import Annotated, Any, TextIO, cast

import numpy as np
import orjson
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, PlainSerializer, PlainValidator

logger = logging.getLogger(__name__)


def validate_complex(value: Any) -> complex:
    """parse complex numbers from python values, [re, im] pairs or strings"""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex pair must have two entries, got {value}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict):
        return complex(float(value["re"]), float(value["im"]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    if isinstance(value, (bool, np.bool_)):
        raise ValueError("booleans are not complex numbers")
    if isinstance(value, (int, float, complex, np.number)):
        return complex(value)
    raise ValueError(f"cannot interpret {value!r} as a complex number")


def serialize_complex(value: complex) -> list[float]:
    return [float(value.real), float(value.imag)]


# complex scalars travel through JSON as [re, im]
Complex = Annotated[
    complex,
    PlainValidator(validate_complex),
    PlainSerializer(serialize_complex, when_used="json"),
]


JSON_ENCODERS = {
    complex: serialize_complex,
    np.complexfloating: serialize_complex,
    np.ndarray: lambda x: recursive_serialize_list(x.tolist()),
    np.integer: lambda x: int(x),
    np.floating: lambda x: float(x),
    np.bool_: lambda x: bool(x),
    type: lambda x: f"{x.__module__}.{x.__name__}",
}


def _encode(value: Any) -> Any:
    for _type, func in JSON_ENCODERS.items():
        if isinstance(value, _type):
            return func(value)
    return value


def recursive_serialize_list(values: list) -> list:
    out = []
    for value in values:
        if isinstance(value, dict):
            out.append(recursive_serialize(value))
        elif isinstance(value, (list, tuple)):
            out.append(recursive_serialize_list(list(value)))
        else:
            out.append(_encode(value))
    return out


def recursive_serialize(v: dict) -> dict:
    for key in list(v):
        if isinstance(v[key], dict):
            v[key] = recursive_serialize(v[key])
        elif isinstance(v[key], (list, tuple)):
            v[key] = recursive_serialize_list(list(v[key]))
        elif isinstance(v[key], pd.DataFrame):
            v[key] = json.loads(v[key].to_json())
        else:
            v[key] = _encode(v[key])

        # fall back to a type name for anything json cannot carry
        try:
            json.dumps(v[key])
        except (TypeError, OverflowError):
            v[key] = f"{v[key].__module__}.{v[key].__class__.__qualname__}"

    return v


def orjson_default(value: Any) -> Any:
    encoded = _encode(value)
    if encoded is value:
        raise TypeError(f"Type is not JSON serializable: {type(value).__name__}")
    return encoded


def orjson_dumps(v: BaseModel) -> str:
    data = recursive_serialize(v.model_dump())
    return orjson.dumps(data, default=orjson_default).decode()


class QbicBaseModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    def to_json(self) -> str:
        return orjson_dumps(self)

    def yaml(self) -> str:
        """serialize first then dump to yaml string"""
        output = json.loads(self.to_json())
        return yaml.dump(output, sort_keys=False)

    @classmethod
    def from_yaml(cls, yaml_obj: str | TextIO):
        return cls.model_validate(remove_none_values(yaml.safe_load(yaml_obj)))

    @classmethod
    def from_dict(cls, config: dict):
        return cls.model_validate(remove_none_values(config))

    @classmethod
    def from_json(cls, text: str):
        return cls.model_validate(remove_none_values(orjson.loads(text)))


def remove_none_values(d: Any) -> Any:
    if isinstance(d, dict):
        d = cast(dict[str, Any], d)
        d = {k: remove_none_values(v) for k, v in d.items() if v is not None}
    elif isinstance(d, list):
        d = cast(list[Any], d)
        d = [remove_none_values(item) for item in d]
    return d
