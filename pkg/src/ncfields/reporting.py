"""
Tables, sweep specifications and text serialization.

Floats are written with the shortest repr that round-trips (at most 17
significant digits), so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from .chiral_edge import ChiralModel
from .errors import InvalidArgumentError
from .spectra import SpectrumSource, Splitting

logger = logging.getLogger(__name__)


# ============================================================================
# Sweep specification
# ============================================================================

class SweepSpec(BaseModel):
    """Parameter sweep for the spectrum and dressing-check commands"""
    kind: Literal["E", "B", "both"] = Field("both", description="Deformation kind, or both")
    theta_values: List[float] = Field(..., min_length=1, description="theta values to sweep")
    n_values: List[int] = Field(..., min_length=1, description="Mode indices (or n_modes for dressing checks)")
    output_path: Optional[Path] = Field(None, description="Output file; stdout when None")
    format: Literal["csv", "json"] = Field("csv", description="Output format")
    splitting: Splitting = Field(Splitting.EXACT, description="E-kind closed-form splitting")
    source: Optional[SpectrumSource] = Field(None, description="Single frequency source; None compares both")

    @field_validator("theta_values")
    @classmethod
    def _finite_thetas(cls, values: List[float]) -> List[float]:
        if not all(math.isfinite(v) for v in values):
            raise ValueError("theta values must be finite")
        return values

    @field_validator("n_values")
    @classmethod
    def _positive_modes(cls, values: List[int]) -> List[int]:
        if any(v < 1 for v in values):
            raise ValueError("mode indices must be >= 1")
        return values

    @property
    def kinds(self) -> List[str]:
        return ["E", "B"] if self.kind == "both" else [self.kind]


# ============================================================================
# Argument parsing helpers
# ============================================================================

def _split(text: str) -> List[str]:
    return [part.strip() for part in str(text).split(",") if part.strip()]


def parse_float_list(value: Any) -> List[float]:
    """'0,0.5,1' or a list -> [0.0, 0.5, 1.0]."""
    items = value if isinstance(value, (list, tuple)) else _split(value)
    try:
        result = [float(item) for item in items]
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"Expected a comma-separated list of numbers, got {value!r}")
    if not result:
        raise InvalidArgumentError(f"Empty list of numbers: {value!r}")
    return result


def parse_fraction_list(value: Any) -> List[Fraction]:
    """'1,5/6,0.5' -> exact fractions."""
    items = value if isinstance(value, (list, tuple)) else _split(value)
    try:
        result = [Fraction(str(item)) for item in items]
    except (TypeError, ValueError, ZeroDivisionError):
        raise InvalidArgumentError(f"Expected a comma-separated list of fractions, got {value!r}")
    if not result:
        raise InvalidArgumentError(f"Empty list of fractions: {value!r}")
    return result


def parse_int_range(value: Any) -> List[int]:
    """'1..4', '1,3,5', '1..3,8' or a list of ints."""
    if isinstance(value, (list, tuple)):
        items = [str(item) for item in value]
    elif isinstance(value, int):
        items = [str(value)]
    else:
        items = _split(value)

    result = []
    try:
        for item in items:
            if ".." in item:
                start, stop = item.split("..", 1)
                result.extend(range(int(start), int(stop) + 1))
            else:
                result.append(int(item))
    except ValueError:
        raise InvalidArgumentError(f"Expected integers or ranges like 1..8, got {value!r}")
    if not result:
        raise InvalidArgumentError(f"Empty integer range: {value!r}")
    return result


# ============================================================================
# Tables
# ============================================================================

def format_value(value: Any) -> str:
    """Deterministic text for a table cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _json_value(value: Any) -> Any:
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return str(value)


def render_table(frame: pd.DataFrame, fmt: str = "csv") -> str:
    """CSV with a header row and LF endings, or sorted-key JSON records."""
    if fmt == "csv":
        text_frame = frame.astype(object).apply(lambda column: column.map(format_value))
        return text_frame.to_csv(index=False, lineterminator="\n")
    if fmt == "json":
        records = [
            {str(key): _json_value(value) for key, value in row.items()}
            for row in frame.astype(object).to_dict(orient="records")
        ]
        return json.dumps(records, sort_keys=True, indent=2) + "\n"
    raise InvalidArgumentError(f"Unknown output format: {fmt}")


def write_text(text: str, path: Optional[Path], stream=None) -> None:
    """Write to path (creating parent directories) or to the given stream."""
    if path is None:
        stream.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)
    logger.info(f"✓ Wrote {path}")


# ============================================================================
# Matrices and models as text
# ============================================================================

def matrix_to_text(matrix: np.ndarray) -> str:
    """Row-major, space-separated, 17 significant digits, LF-terminated rows."""
    values = np.asarray(matrix, dtype=float) + 0.0
    if values.ndim != 2:
        raise InvalidArgumentError(f"Expected a 2-d matrix, got shape {values.shape}")
    return "".join(" ".join("%.17g" % v for v in row) + "\n" for row in values)


def matrix_from_text(text: str) -> np.ndarray:
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    if len({len(row) for row in rows}) > 1:
        raise InvalidArgumentError("Ragged matrix text")
    return np.array([[float(v) for v in row] for row in rows])


def model_to_text(model: ChiralModel) -> str:
    """Flat key-value text: kind, N, theta, omega (row-major)."""
    entries = " ".join("%.17g" % v for v in (model.omega + 0.0).ravel())
    lines = [
        f"kind={model.family}",
        f"N={model.n_branches}",
        f"theta={model.theta!r}",
        f"omega={entries}",
    ]
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> ChiralModel:
    fields: Dict[str, str] = {}
    for line in text.strip().splitlines():
        if "=" not in line:
            raise InvalidArgumentError(f"Malformed model line: {line!r}")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()

    missing = {"kind", "N", "theta", "omega"} - fields.keys()
    if missing:
        raise InvalidArgumentError(f"Model text is missing keys: {sorted(missing)}")
    size = int(fields["N"])
    entries = [float(v) for v in fields["omega"].split()]
    if len(entries) != size * size:
        raise InvalidArgumentError(f"Expected {size * size} omega entries, got {len(entries)}")
    return ChiralModel(
        omega=np.array(entries).reshape(size, size),
        theta=float(fields["theta"]),
        family=fields["kind"],
    )


def rows_to_frame(rows: Iterable[Dict[str, Any]], columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(columns))
