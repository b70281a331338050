"""Read state/Choi documents and write reports and outcome tables"""
import json
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq
from loguru import logger

from src.errors import ArgumentError, InvalidStateError
from src.measurement.bell_measurement import BellOutcomes
from src.quantum.channels import ChoiMatrix
from src.quantum.states import DensityMatrix

PathLike = Union[str, Path]


def outcome_columns(n: int):
    return [f"a{k}" for k in range(1, n + 1)] + [f"b{k}" for k in range(1, n + 1)]


def outcome_schema(n: int) -> pa.Schema:
    return pa.schema([(name, pa.uint8()) for name in outcome_columns(n)])


def outcomes_to_frame(outcomes: BellOutcomes) -> pd.DataFrame:
    """One row per shot in sampling order, columns a1..an, b1..bn"""
    data = np.hstack([outcomes.a, outcomes.b]).astype(np.uint8)
    return pd.DataFrame(data, columns=outcome_columns(outcomes.n))


def frame_to_outcomes(frame: pd.DataFrame) -> BellOutcomes:
    a_cols = [c for c in frame.columns if c.startswith("a")]
    b_cols = [c for c in frame.columns if c.startswith("b")]
    if not a_cols or len(a_cols) != len(b_cols):
        raise ArgumentError(f"Outcome table needs matching a/b columns, got {list(frame.columns)}")
    return BellOutcomes(frame[a_cols].to_numpy(), frame[b_cols].to_numpy())


def write_outcomes(outcomes: BellOutcomes, path: PathLike) -> Path:
    """CSV by default, Parquet when the path ends in .parquet"""
    path = Path(path)
    frame = outcomes_to_frame(outcomes)
    try:
        if path.suffix == ".parquet":
            table = pa.Table.from_pandas(frame, schema=outcome_schema(outcomes.n), preserve_index=False)
            pq.write_table(table, path)
        else:
            frame.to_csv(path, index=False)
    except OSError as e:
        logger.error(f"Error writing outcomes to {path}: {e}")
        raise
    logger.info(f"Wrote {len(frame)} outcomes to {path}")
    return path


def read_outcomes(path: PathLike) -> BellOutcomes:
    path = Path(path)
    if path.suffix == ".parquet":
        frame = pq.read_table(path).to_pandas()
    else:
        frame = pd.read_csv(path, dtype=np.uint8)
    return frame_to_outcomes(frame)


def load_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        logger.error(f"Malformed JSON in {path}: {e}")
        raise ArgumentError(f"Malformed JSON in {path}: {e}")


def load_state_file(path: PathLike) -> DensityMatrix:
    try:
        return DensityMatrix.from_dict(load_json(path))
    except InvalidStateError as e:
        logger.error(f"Invalid state file {path}: {e}")
        raise


def load_choi_file(path: PathLike) -> ChoiMatrix:
    return ChoiMatrix.from_dict(load_json(path))


def dump_report(report: Dict[str, Any]) -> str:
    """Two-space JSON in insertion order"""
    return json.dumps(report, indent=2, sort_keys=False)
