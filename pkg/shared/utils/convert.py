from dataclasses import asdict, is_dataclass
from enum import Enum
import json
import math
from typing import Any

import numpy as np


def to_serializable(value: Any) -> Any:
    """Convert numpy, enum and dataclass values to plain JSON-compatible types."""
    if value is None:
        return None
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value) and not isinstance(value, type):
        return to_serializable(asdict(value))
    if isinstance(value, dict):
        return {str(k): to_serializable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_serializable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_serializable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (str, int, bool)):
        return value
    return str(value)


def dumps_stable(data: Any, indent: int | None = 2) -> str:
    """JSON text with sorted keys so identical inputs give identical bytes."""
    return json.dumps(to_serializable(data), indent=indent, sort_keys=True)
