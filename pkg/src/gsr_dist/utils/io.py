import csv
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Sequence, TextIO


@contextmanager
def open_output(path: Optional[Path]) -> Iterator[TextIO]:
    """A text stream on ``path`` with LF newlines, or stdout when path is None"""
    if path is None:
        yield sys.stdout
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as stream:
        yield stream


def format_number(value: float) -> str:
    """Shortest round-trip text for a float"""
    return repr(float(value))


def write_csv(path: Optional[Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open_output(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) if isinstance(v, float) else v for v in row])


def write_json(path: Optional[Path], payload: Any) -> None:
    with open_output(path) as stream:
        json.dump(payload, stream, indent=2)
        stream.write("\n")


def sidecar_path(path: Path) -> Path:
    """``<out>.meta.json`` next to an output file"""
    return path.with_name(path.name + ".meta.json")
