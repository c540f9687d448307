"""
Report model and deterministic serialization

JSON reports are UTF-8 with sorted keys. Python's float repr is the
shortest string that round-trips, which never needs more than 17
significant digits. Non-finite floats become the strings "inf", "-inf"
and "nan".
"""

import json
import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from cubiclab_api import __version__

CSV_FLOAT_FORMAT = "%.17g"


@dataclass
class AnalysisReport:
    """One command invocation and its results"""

    command: str
    form: Optional[str]
    parameters: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    passed: bool = True
    version: str = __version__
    duration: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "form": self.form,
            "parameters": self.parameters,
            "results": self.results,
            "passed": self.passed,
            "version": self.version,
            "duration": self.duration,
        }


def sanitize(value: Any) -> Any:
    """Convert numpy scalars/arrays, enums and tuples into plain JSON values"""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [sanitize(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def serialize(report: AnalysisReport) -> bytes:
    text = json.dumps(sanitize(report.to_dict()), sort_keys=True, indent=2, allow_nan=False, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def write_report(report: AnalysisReport, out: Optional[Union[str, Path]] = None):
    """Write to `out`, or to stdout when no path is given"""
    data = serialize(report)
    if out is None:
        sys.stdout.write(data.decode("utf-8"))
        sys.stdout.flush()
    else:
        Path(out).write_bytes(data)


def samples_frame(samples: Dict[str, np.ndarray]) -> pd.DataFrame:
    """Columns in insertion order; all arrays must have equal length"""
    lengths = {len(np.asarray(v)) for v in samples.values()}
    if len(lengths) > 1:
        raise ValueError(f"sample columns differ in length: {sorted(lengths)}")
    return pd.DataFrame({name: np.asarray(column) for name, column in samples.items()})


def write_csv(samples: Dict[str, np.ndarray], path: Union[str, Path]):
    samples_frame(samples).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
