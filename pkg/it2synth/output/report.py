"""JSON and CSV writers for reports, gain tables, trajectories and diagnostics."""

import json
import math
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd

from ..errors import It2SynthError, ModelInputError
from ..utils.logger import get_logger


def round_sig(value: float, digits: int) -> float:
    """Round to ``digits`` significant digits; non-finite values pass through."""
    if value == 0.0 or not math.isfinite(value):
        return value
    return float(f"{value:.{digits}g}")


def normalise(obj: Any, digits: int = 12) -> Any:
    """
    Convert numpy and tuple content to plain JSON types with rounded floats.

    Non-finite floats become strings so the output stays valid JSON.
    """
    if isinstance(obj, dict):
        return {str(k): normalise(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalise(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalise(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return str(value)
        return round_sig(value, digits)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(data: Any, path: Union[str, Path], digits: int = 12) -> Path:
    """Write ``data`` as indented, key-sorted JSON with rounded floats."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(normalise(data, digits), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_csv(frame: pd.DataFrame, path: Union[str, Path], digits: int = 12) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=f"%.{digits}g")
    return path


def read_gains(path: Union[str, Path]) -> list[list[np.ndarray]]:
    """
    Read a gain table written from :meth:`SynthesisResult.gains_frame`.

    Raises:
        ModelInputError: If the table lacks the index or gain columns
    """
    frame = pd.read_csv(path)
    required = {"subsystem", "rule", "row"}
    gain_cols = sorted((c for c in frame.columns if c.startswith("g") and c[1:].isdigit()), key=lambda c: int(c[1:]))
    if not required <= set(frame.columns) or not gain_cols:
        raise ModelInputError(f"{path}: gain table needs columns subsystem, rule, row, g0, ...")
    gains: list[list[np.ndarray]] = []
    for i in sorted(frame["subsystem"].unique()):
        sub = frame[frame["subsystem"] == i]
        per_rule = []
        for j in sorted(sub["rule"].unique()):
            rows = sub[sub["rule"] == j].sort_values("row")
            values = rows[gain_cols].to_numpy(dtype=float)
            per_rule.append(values[:, ~np.all(np.isnan(values), axis=0)])
        gains.append(per_rule)
    return gains


class ReportWriter:
    """Write run artifacts into one output directory."""

    def __init__(self, directory: Union[str, Path], digits: int = 12, verbose: bool = True) -> None:
        """
        Initialize the writer.

        Args:
            directory: Output directory (created if missing)
            digits: Significant digits kept for floats
            verbose: Enable verbose logging
        """
        self.directory = Path(directory)
        self.digits = digits
        self.logger = get_logger(verbose=verbose)
        self.written: list[Path] = []

    def _target(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        return self.directory / name

    def json(self, name: str, data: Any) -> Path:
        path = write_json(data, self._target(name), self.digits)
        self.written.append(path)
        self.logger.debug(f"wrote {path}")
        return path

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = write_csv(frame, self._target(name), self.digits)
        self.written.append(path)
        self.logger.debug(f"wrote {path}")
        return path

    def timings(self, timings: dict[str, float]) -> Path:
        """Wall-clock figures; the only non-deterministic artifact."""
        path = self._target("timings.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump({k: float(v) for k, v in sorted(timings.items())}, f, indent=2)
            f.write("\n")
        self.written.append(path)
        return path

    def diagnostic(self, error: It2SynthError, extra: Optional[dict[str, Any]] = None) -> Path:
        """Machine-readable record of a failed run."""
        data = error.to_dict()
        if extra:
            data.update(extra)
        return self.json("diagnostic.json", data)
