"""
Utility functions
"""
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, List, Optional, Union

import numpy as np
import pandas as pd

LOGGER = logging.getLogger(__name__)

# IO types
PathLike = Union[str, Path]


def create_folder(dest_dir: PathLike, verbose: Optional[bool] = False) -> None:
    """
    Create new folders.

    Parameters
    ------------------------
    dest_dir: PathLike
        Path where the folder will be created if it does not exist.
    verbose: Optional[bool]
        If we want to log the folder status. Default False.
    """

    if not os.path.exists(dest_dir):
        if verbose:
            LOGGER.info("Creating new directory: %s", dest_dir)
        os.makedirs(dest_dir, exist_ok=True)


def check_path_instance(obj: object) -> bool:
    """
    Checks if an objects belongs to pathlib.Path subclasses.

    Parameters
    ------------------------
    obj: object
        Object that wants to be validated.

    Returns
    ------------------------
    bool:
        True if the object is an instance of Path subclass, False otherwise.
    """

    return isinstance(obj, Path)


def to_jsonable(value: Any) -> Any:
    """
    Converts paths, numpy scalars and arrays into json types. Non-finite
    floats become None so the output stays strict json.

    Parameters
    ------------------------
    value: Any
        Value to convert, nested dicts and lists included.

    Returns
    ------------------------
    Any
        Converted value.
    """

    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if check_path_instance(value):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None

    return value


def save_dict_as_json(
    filename: PathLike, dictionary: dict, verbose: Optional[bool] = False
) -> None:
    """
    Saves a dictionary as a json file.

    Parameters
    ------------------------
    filename: PathLike
        Name of the json file.
    dictionary: dict
        Dictionary that will be saved as json.
    verbose: Optional[bool]
        True if you want to log the path where the file was saved.
    """

    if dictionary is None:
        dictionary = {}

    with open(filename, "w") as json_file:
        json.dump(to_jsonable(dictionary), json_file, indent=4)
        json_file.write("\n")

    if verbose:
        LOGGER.info("Json file saved: %s", filename)


def read_json_as_dict(filepath: PathLike) -> dict:
    """
    Reads a json as dictionary.

    Parameters
    ------------------------
    filepath: PathLike
        Path where the json is located.

    Returns
    ------------------------
    dict:
        Dictionary with the data the json has. None if the file does not
        exist.
    """

    dictionary = None

    if os.path.exists(filepath):
        with open(filepath) as json_file:
            dictionary = json.load(json_file)

    return dictionary


def save_string_to_txt(txt: str, filepath: PathLike, mode="w") -> None:
    """
    Saves a text in a file in the given mode.

    Parameters
    ------------------------
    txt: str
        String to be saved.

    filepath: PathLike
        Path where the file is located or will be saved.

    mode: str
        File open mode.
    """

    with open(filepath, mode) as file:
        file.write(txt + "\n")


def save_to_csv(
    data: Union[List[dict], pd.DataFrame],
    file_path: PathLike,
    columns: Optional[List[str]] = None,
) -> PathLike:
    """
    Save the given data to a CSV file.

    Floats are written with repr precision so repeated runs produce
    identical bytes.

    Parameters
    ------------------------
    data: Union[List[dict], pd.DataFrame]
        The data to be saved.
    file_path: PathLike
        The file path for the CSV file.
    columns: Optional[List[str]]
        Column order. Default: the order of the data.

    Returns
    ------------------------
    PathLike
        The path of the saved CSV file.
    """

    df = data if isinstance(data, pd.DataFrame) else pd.DataFrame(data)
    if columns is not None:
        df = df.reindex(columns=columns)
    df.to_csv(file_path, index=False, float_format="%.17g")
    return file_path
