"""Atomic file output and checksums."""

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

PathLike = Union[str, Path]


def write_text_atomic(path: PathLike, text: str) -> Path:
    """Write text through a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv_atomic(
    path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    """Write a headed CSV with Unix line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return write_text_atomic(path, buffer.getvalue())


def write_json_atomic(path: PathLike, document: Any) -> Path:
    """Write JSON with sorted keys; floats keep their shortest round-trip repr."""
    text = json.dumps(document, indent=2, sort_keys=True, allow_nan=False)
    return write_text_atomic(path, text + "\n")


def format_float(value: float) -> str:
    """17 significant digits, enough for an exact float64 round trip."""
    return format(float(value), ".17g")


def sha256_file(path: PathLike) -> str:
    """Hex SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
