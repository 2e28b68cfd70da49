"""
Dataset writers shared by the command-line tools.
CSV files carry a header row, '.' decimals and 17 significant digits.
"""
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Union

import pandas as pd

from analysis.errors import KernelSpecError
from analysis.kernel_model import KernelSpec

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def write_frame(frame: pd.DataFrame, out: Optional[PathLike] = None):
    """Write a DataFrame as CSV to ``out`` or to standard output."""
    if out is None:
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return
    path = Path(out)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %d rows to %s", len(frame), path)


def write_json(payload: dict, out: Optional[PathLike] = None):
    """Write a JSON document (sorted keys, trailing newline)."""
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text)
    logger.info("Wrote %s", out)


def read_spec_file(path: PathLike) -> dict:
    """
    Load the JSON object of a kernel spec file.

    Raises:
        KernelSpecError: if the file is missing or not valid JSON
    """
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as e:
        raise KernelSpecError("spec", f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise KernelSpecError("spec", f"{path} is not valid JSON ({e.msg} at line {e.lineno})") from e
    if not isinstance(payload, dict):
        raise KernelSpecError("spec", f"{path} must contain a JSON object")
    return payload


def parse_theta(text: str) -> list:
    """Parse a comma-separated weight list such as ``1,0.4,1.0``."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise KernelSpecError("theta", f"cannot parse '{text}' as a comma-separated list of numbers") from None


def build_spec(spec_path: Optional[PathLike] = None, theta: Optional[str] = None,
               tau: Optional[float] = None) -> KernelSpec:
    """
    Combine a spec file with inline overrides (inline flags win).

    An inline theta replaces the file's weights and k is re-inferred from it.
    """
    payload = read_spec_file(spec_path) if spec_path else {}
    if theta is not None:
        payload["theta"] = parse_theta(theta)
        payload.pop("k", None)
    if tau is not None:
        payload["tau"] = tau
    return KernelSpec.from_dict(payload)
