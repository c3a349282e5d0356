from .checks import check_finite_scalar, check_probability_vector
from .dict import ConfigLoader, dict_deep_update, dump_dict_to_json, load_dict_from_file
from .json_schema import ExperimentJSONEncoder, fill_defaults, iter_schema_errors
from .types import (
    ArrayType,
    FilePathType,
    FolderPathType,
    OptionalArrayType,
    OptionalFolderPathType,
    SeedType,
    UsersPerCellType,
)
