import collections.abc
import json
import re
import warnings
from copy import deepcopy
from pathlib import Path

import yaml

from .types import FilePathType


class ConfigLoader(yaml.SafeLoader):
    """Safe YAML loader that keeps dates as strings and reads exponent notation such as 1e-3 as floats."""

    @classmethod
    def remove_implicit_resolver(cls, tag_to_remove):
        """
        Remove implicit resolvers for a particular tag.

        Takes care not to modify resolvers in super classes.
        """
        if "yaml_implicit_resolvers" not in cls.__dict__:
            cls.yaml_implicit_resolvers = cls.yaml_implicit_resolvers.copy()
        for first_letter, mappings in cls.yaml_implicit_resolvers.items():
            cls.yaml_implicit_resolvers[first_letter] = [
                (tag, regexp) for tag, regexp in mappings if tag != tag_to_remove
            ]


ConfigLoader.remove_implicit_resolver("tag:yaml.org,2002:timestamp")
ConfigLoader.remove_implicit_resolver("tag:yaml.org,2002:float")
# YAML 1.1 only resolves exponents written with a dot and a signed exponent, e.g. 1.0e-3.
ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?[0-9][0-9_]*(?::[0-5]?[0-9])+\.[0-9_]*
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def load_dict_from_file(file_path: FilePathType) -> dict:
    """Safely load an experiment configuration from .yml or .json files."""
    file_path = Path(file_path)
    if not file_path.is_file():
        raise FileNotFoundError(f"{file_path} is not a file.")
    if file_path.suffix not in (".json", ".yml", ".yaml"):
        raise ValueError(f"{file_path} is not a valid yaml or .json file.")

    if file_path.suffix in (".yml", ".yaml"):
        with open(file=file_path, mode="r") as stream:
            dictionary = yaml.load(stream=stream, Loader=ConfigLoader)
    else:
        with open(file=file_path, mode="r") as fp:
            dictionary = json.load(fp=fp)
    return dictionary if dictionary is not None else dict()


def dump_dict_to_json(dictionary: dict, file_path: FilePathType, encoder: type = None) -> Path:
    """
    Write a dictionary as stable, human-readable JSON.

    Keys are sorted and the indentation is fixed so that repeated runs with the same seed write identical bytes.
    """
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file=file_path, mode="w") as fp:
        json.dump(obj=dictionary, fp=fp, cls=encoder, indent=2, sort_keys=True)
        fp.write("\n")
    return file_path


def dict_deep_update(
    d: collections.abc.Mapping,
    u: collections.abc.Mapping,
    copy: bool = True,
    skip_none: bool = False,
) -> collections.abc.Mapping:
    """
    Perform an update to all nested keys of dictionary d(input) from dictionary u(updating dict).

    Parameters
    ----------
    d: dict
        dictionary to update
    u: dict
        dictionary to update from
    copy: bool
        whether to deepcopy the input dict d
    skip_none: bool
        if True, keys of u whose value is None leave d untouched; used when layering optional command line flags
        on top of a configuration file.

    Returns
    -------
    d: dict
        return the updated dictionary
    """
    dict_to_update, dict_with_update_values = d, u
    if not isinstance(dict_to_update, collections.abc.Mapping):
        warnings.warn("input to update should be a dict, returning output")
        return dict_with_update_values

    if copy:
        dict_to_update = deepcopy(dict_to_update)

    for key_to_update, update_values in dict_with_update_values.items():
        if skip_none and update_values is None:
            continue
        # Update with a dict like object is recursive until an empty dict is found.
        if isinstance(update_values, collections.abc.Mapping):
            sub_dict_to_update = dict_to_update.get(key_to_update, dict())
            dict_to_update[key_to_update] = dict_deep_update(
                sub_dict_to_update, update_values, copy=False, skip_none=skip_none
            )
        else:
            dict_to_update[key_to_update] = update_values

    return dict_to_update
