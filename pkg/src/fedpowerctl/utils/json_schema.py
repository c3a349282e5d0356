import json
from typing import Iterator, Tuple

import numpy as np
from jsonschema import Draft7Validator


class ExperimentJSONEncoder(json.JSONEncoder):
    def default(self, obj):
        # This should transforms numpy generic integers and floats to python floats
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()

        # The base-class handles it
        return super().default(obj)


def fill_defaults(schema: dict, defaults: dict, overwrite: bool = True):
    """
    Insert the values of the defaults dict as default values in the schema in place.

    Parameters
    ----------
    schema: dict
    defaults: dict
    overwrite: bool
    """
    for key, val in schema["properties"].items():
        if key in defaults:
            if val.get("type") == "object":
                fill_defaults(val, defaults[key], overwrite=overwrite)
            elif overwrite or ("default" not in val):
                val["default"] = defaults[key]


def iter_schema_errors(instance: dict, schema: dict) -> Iterator[Tuple[str, str]]:
    """
    Yield (field, message) pairs for every violation of `schema`, ordered by field name.

    The field is the top-level key the violation belongs to, or the offending key for
    additional properties that are not allowed.
    """
    serialized_instance = json.loads(json.dumps(instance, cls=ExperimentJSONEncoder))
    errors = []
    for error in Draft7Validator(schema).iter_errors(serialized_instance):
        if error.path:
            field = str(error.path[0])
        elif error.validator == "additionalProperties":
            unexpected = sorted(set(serialized_instance) - set(schema.get("properties", dict())))
            field = unexpected[0] if unexpected else "<root>"
        else:
            field = "<root>"
        errors.append((field, error.message))
    yield from sorted(errors)
