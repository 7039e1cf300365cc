"""Parser and writer for cohort manifests and per-session CSV files."""

import io
import logging
import math
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..models import CHANNELS, ChildMeta, Gender, WritingSession
from ..utils.errors import DataError
from ..utils.io import write_text_atomic

logger = logging.getLogger(__name__)

MANIFEST_HEADER: Tuple[str, ...] = (
    "child_id",
    "age_years",
    "gender",
    "sems_label",
    "session_file",
)
SESSION_HEADER: Tuple[str, ...] = ("timestamp_ms",) + CHANNELS
MANIFEST_NAME = "manifest.csv"
FLOAT_FORMAT = "%.17g"


class CohortParser:
    """Read and write the on-disk cohort format."""

    @staticmethod
    def parse_cohort(
        manifest_path: Union[str, Path], scale_max: float = 12.0
    ) -> List[WritingSession]:
        """Parse a cohort manifest and every session file it references.

        Session paths in the manifest are resolved relative to the
        manifest's directory.

        Args:
            manifest_path: Path of the manifest CSV
            scale_max: Upper bound of the SEMS scale for label checks

        Returns:
            One WritingSession per manifest row, in manifest order

        Raises:
            DataError: missing file, malformed row, non-increasing
                timestamps or label out of range (with file and line)
        """
        manifest_path = Path(manifest_path)
        rows = CohortParser._read_frame(manifest_path, MANIFEST_HEADER)

        sessions = []
        for line, cells in rows.iterrows():
            line = int(line)
            child_id, age, gender, label, session_file = cells
            try:
                meta = ChildMeta(
                    child_id=child_id,
                    age_years=CohortParser._parse_float(
                        age, "age_years", manifest_path, line
                    ),
                    gender=Gender.from_literal(gender),
                )
            except DataError as e:
                raise DataError(str(e), str(manifest_path), line) from e
            sems_label = CohortParser._parse_float(
                label, "sems_label", manifest_path, line
            )
            if not 0.0 <= sems_label <= scale_max:
                raise DataError(
                    f"sems_label {sems_label} outside [0, {scale_max}]",
                    str(manifest_path),
                    line,
                )
            session_path = manifest_path.parent / session_file
            timestamps, values = CohortParser.parse_session_file(session_path)
            session = WritingSession(
                meta=meta,
                timestamps=timestamps,
                values=values,
                sems_label=sems_label,
            )
            try:
                session.validate(scale_max)
            except DataError as e:
                raise DataError(str(e), str(session_path)) from e
            sessions.append(session)

        logger.info(f"Parsed {len(sessions)} sessions from {manifest_path}")
        return sessions

    @staticmethod
    def parse_session_file(
        path: Union[str, Path],
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Parse one session CSV into (timestamps, values).

        Timestamps are checked for strict increase but never re-sorted.
        """
        path = Path(path)
        frame = CohortParser._read_frame(path, SESSION_HEADER)
        if frame.empty:
            raise DataError("session file has no frames", str(path))

        stamps = frame["timestamp_ms"]
        not_int = ~stamps.str.fullmatch(r"[+-]?\d+")
        if not_int.any():
            line = int(not_int.idxmax())
            raise DataError(
                f"timestamp_ms is not an integer: {stamps[line]!r}", str(path), line
            )
        timestamps = stamps.astype(np.int64).to_numpy()
        steps = np.diff(timestamps)
        if np.any(steps <= 0):
            k = int(np.argmax(steps <= 0)) + 1
            raise DataError(
                f"non-monotonic timestamp {timestamps[k]} after {timestamps[k - 1]}",
                str(path),
                int(frame.index[k]),
            )

        cells = frame[list(CHANNELS)]
        try:
            # float() per cell keeps the 17-digit round trip exact
            numeric = cells.to_numpy(dtype=np.float64)
        except ValueError:
            numeric = cells.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(numeric)
        if bad.any():
            row, col = (int(i) for i in np.argwhere(bad)[0])
            raise DataError(
                f"{CHANNELS[col]} is not a finite number: {cells.iat[row, col]!r}",
                str(path),
                int(frame.index[row]),
            )
        return timestamps, numeric

    @staticmethod
    def write_cohort(
        sessions: Sequence[WritingSession], out_dir: Union[str, Path]
    ) -> Path:
        """Write sessions as `manifest.csv` plus `sessions/<child_id>.csv`.

        Returns:
            Path of the written manifest
        """
        out_dir = Path(out_dir)
        records = []
        for session in sessions:
            relative = f"sessions/{session.child_id}.csv"
            CohortParser.write_session_file(session, out_dir / relative)
            records.append(
                {
                    "child_id": session.child_id,
                    "age_years": float(session.meta.age_years),
                    "gender": session.meta.gender.literal,
                    "sems_label": float(session.sems_label),
                    "session_file": relative,
                }
            )
        manifest = pd.DataFrame.from_records(records, columns=list(MANIFEST_HEADER))
        path = CohortParser._write_frame(manifest, out_dir / MANIFEST_NAME)
        logger.info(f"Wrote {len(sessions)} sessions to {out_dir}")
        return path

    @staticmethod
    def write_session_file(
        session: WritingSession, path: Union[str, Path]
    ) -> Path:
        """Write one session CSV at the 17-significant-digit precision."""
        frame = pd.DataFrame(session.values, columns=list(CHANNELS))
        frame.insert(0, "timestamp_ms", np.asarray(session.timestamps, dtype=np.int64))
        return CohortParser._write_frame(frame, path)

    @staticmethod
    def _write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
        text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return write_text_atomic(path, text)

    @staticmethod
    def _read_frame(path: Path, header: Sequence[str]) -> pd.DataFrame:
        """Read a headed CSV as stripped strings indexed by file line number.

        Blank lines are dropped; every other row must have exactly
        `len(header)` cells. Cells are never quoted, so the cell count of
        a line is its comma count plus one.
        """
        if not path.is_file():
            raise DataError("file not found", str(path))
        raw = path.read_bytes()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            line = raw.count(b"\n", 0, e.start) + 1
            raise DataError(
                f"invalid UTF-8 byte 0x{raw[e.start]:02x}", str(path), line
            ) from None
        if not text.strip():
            raise DataError("empty file", str(path), 1)

        width = len(header)
        lines = text.split("\n")
        counts = pd.Series(lines, index=range(1, len(lines) + 1)).str.count(",") + 1
        frame = pd.read_csv(
            io.StringIO(text),
            header=None,
            names=range(max(width, int(counts.max()))),
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
        )
        frame.index = frame.index + 1
        frame = frame.apply(
            lambda column: column.map(lambda v: v.strip() if isinstance(v, str) else v)
        )

        blank = frame.fillna("").eq("").all(axis=1)
        found = tuple(frame.loc[1, : width - 1].fillna(""))
        if found != tuple(header) or counts[1] != width:
            raise DataError(f"expected header {','.join(header)}", str(path), 1)
        frame = frame[~blank].drop(index=1)

        ragged = counts.loc[frame.index] != width
        if ragged.any():
            line = int(ragged.idxmax())
            raise DataError(
                f"expected {width} columns, got {counts[line]}", str(path), line
            )
        frame = frame.iloc[:, :width]
        frame.columns = list(header)
        return frame

    @staticmethod
    def _parse_float(cell: str, column: str, path: Path, line: int) -> float:
        try:
            value = float(cell)
        except ValueError:
            raise DataError(
                f"{column} is not numeric: {cell!r}", str(path), line
            ) from None
        if not math.isfinite(value):
            raise DataError(f"{column} is not finite", str(path), line)
        return value
