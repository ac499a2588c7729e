"""JSON / CSV writers shared by the CLI and the HTTP layer.

Floats are emitted round-trip exact (at most 17 significant digits), with
infinities spelled "inf" / "-inf" so that files stay valid JSON.
"""
import json
import logging
import math
import sys
from typing import Any, Optional

import numpy as np
import pandas as pd

from .config import FLOAT_FORMAT
from .errors import DomainError, OutputError

logger = logging.getLogger(__name__)


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return float(FLOAT_FORMAT % x)
    return obj


def from_json_float(value: Any) -> float:
    if isinstance(value, str):
        return float(value.strip().lower())
    return float(value)


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2)


def write_json(obj: Any, path: Optional[str]) -> None:
    text = dumps(obj)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    logger.info("wrote %s", path)


def read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise DomainError(f"{path} is not valid JSON: {e}") from e


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(frame: pd.DataFrame, path: Optional[str]) -> None:
    text = frame_to_csv(frame)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    logger.info("wrote %s (%d rows)", path, len(frame))
