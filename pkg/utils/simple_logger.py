"""
JSON log / manifest saving
"""
import json
from pathlib import Path
from typing import Any

import numpy as np

from config.manager import settings


def _to_jsonable(value: Any) -> Any:
    """numpy scalars and arrays -> plain Python"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return value.as_posix()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps(data: Any) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(data, ensure_ascii=False, indent=settings.log.indent,
                      sort_keys=True, default=_to_jsonable) + "\n"


def save_log(file_path, data: dict) -> Path:
    """
    Save a JSON record (metrics, manifest, failure marker).

    Args:
        file_path: target file path.
        data: dictionary to save.

    Returns:
        The written path.
    """
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline="\n") as f:
        f.write(dumps(data))
    return path


def load_log(file_path) -> dict:
    with open(file_path, 'r', encoding='utf-8') as f:
        return json.load(f)
