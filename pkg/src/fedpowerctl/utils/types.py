from pathlib import Path
from typing import Optional, Sequence, TypeVar, Union

import numpy as np

FilePathType = TypeVar("FilePathType", str, Path)
FolderPathType = TypeVar("FolderPathType", str, Path)
OptionalFolderPathType = Optional[FolderPathType]
ArrayType = Union[list, np.ndarray]
OptionalArrayType = Optional[ArrayType]
SeedType = Union[int, np.random.SeedSequence]
UsersPerCellType = Union[int, Sequence[int]]
