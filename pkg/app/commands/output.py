"""
Report emission: JSON and CSV payloads on stdout, structured errors on stderr.
"""
import json
import sys
from typing import Any, Iterable, TextIO

from pydantic import BaseModel

from app.utils.exceptions import ToricError


def emit_json(payload: Any, stream: TextIO = None) -> None:
    stream = stream or sys.stdout
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2, by_alias=True)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True)
    stream.write(text + "\n")


def emit_rows(rows: Iterable[str], header: str = None, stream: TextIO = None) -> None:
    stream = stream or sys.stdout
    if header:
        stream.write(header + "\n")
    for row in rows:
        stream.write(row + "\n")


def emit_error(error: ToricError, stream: TextIO = None) -> None:
    stream = stream or sys.stderr
    stream.write(json.dumps(error.to_response(), sort_keys=True, default=str) + "\n")
