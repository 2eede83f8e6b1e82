"""On-disk formats: versioned CSV tables, binary field dumps and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import LabError
from ..spectral import Grid

CSV_SCHEMA_VERSION = 1
DUMP_MAGIC = b"CMKDVFLD"
DUMP_VERSION = 1
_DUMP_HEADER = struct.Struct("<8sIIQdd")  # magic, version, kind, n_points, L, t
_KINDS = {"spatial": 0, "spectral": 1}


class LabIOError(LabError):
    """Unreadable or inconsistent files; the CLI maps it to exit code 3."""


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, name: str, columns, rows) -> Path:
    """RFC-4180 CSV preceded by ``# schema: <name> v<version>``."""
    path = Path(path)
    buf = io.StringIO(newline="")
    buf.write(f"# schema: {name} v{CSV_SCHEMA_VERSION}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    path.write_bytes(buf.getvalue().encode())
    return path


def read_csv(path):
    """Return ``(schema, columns, rows)``; numeric cells come back as floats."""
    text = Path(path).read_text()
    lines = text.splitlines(keepends=True)
    if not lines or not lines[0].startswith("# schema:"):
        raise LabIOError(f"{path}: missing schema line")
    schema = lines[0][len("# schema:"):].strip()
    reader = csv.reader(io.StringIO("".join(lines[1:]), newline=""))
    columns = next(reader)
    rows = []
    for raw in reader:
        row = []
        for cell in raw:
            try:
                row.append(float(cell))
            except ValueError:
                row.append(cell)
        rows.append(row)
    return schema, columns, rows


def write_field(path, grid: Grid, values, t: float, kind: str = "spatial") -> Path:
    values = np.ascontiguousarray(values, dtype="<c16")
    if values.shape != (grid.n_points,):
        raise LabIOError("field does not match the grid")
    header = _DUMP_HEADER.pack(DUMP_MAGIC, DUMP_VERSION, _KINDS[kind], grid.n_points,
                               float(grid.domain_half_length), float(t))
    path = Path(path)
    path.write_bytes(header + values.tobytes())
    return path


def read_field(path):
    """Return ``(grid, values, t, kind)`` from a dump written by :func:`write_field`."""
    data = Path(path).read_bytes()
    if len(data) < _DUMP_HEADER.size:
        raise LabIOError(f"{path}: truncated header")
    magic, version, kind, n, L, t = _DUMP_HEADER.unpack_from(data)
    if magic != DUMP_MAGIC:
        raise LabIOError(f"{path}: not a field dump")
    if version != DUMP_VERSION:
        raise LabIOError(f"{path}: unsupported dump version {version}")
    values = np.frombuffer(data, dtype="<c16", offset=_DUMP_HEADER.size)
    if values.size != n:
        raise LabIOError(f"{path}: expected {n} samples, found {values.size}")
    names = {v: k for k, v in _KINDS.items()}
    return Grid(int(n), L), values.copy(), t, names[kind]


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class FileEntry:
    path: str  # relative to the run directory
    kind: str
    sha256: str
    t: float | None = None


@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    started: str
    finished: str = ""
    status: str = "running"
    error: str = ""
    tolerances: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    cache_hit: bool = False
    directory: str = field(default="", compare=False)

    FILENAME = "manifest.json"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def add(self, path, kind: str, t: float | None = None):
        path = Path(path)
        rel = path.relative_to(self.directory) if self.directory else path
        self.files.append(FileEntry(rel.as_posix(), kind, file_digest(path), t))

    def series(self, kind: str):
        return [f for f in self.files if f.kind == kind]

    def path_of(self, entry: FileEntry) -> Path:
        return Path(self.directory) / entry.path

    def to_text(self) -> str:
        body = asdict(self)
        body.pop("directory")
        body.pop("cache_hit")
        return json.dumps(body, indent=2, sort_keys=False) + "\n"

    def save(self, directory=None) -> Path:
        self.files.sort(key=lambda f: f.path)
        directory = Path(directory or self.directory)
        path = directory / self.FILENAME
        path.write_text(self.to_text())
        return path

    @classmethod
    def load(cls, directory) -> "RunManifest":
        path = Path(directory) / cls.FILENAME
        try:
            body = json.loads(path.read_text())
        except (OSError, ValueError) as exc:
            raise LabIOError(f"cannot read manifest in {directory}: {exc}") from exc
        body["files"] = [FileEntry(**f) for f in body.get("files", [])]
        return cls(directory=str(directory), **body)

    def verify(self) -> list:
        """Problems found: missing files, hash mismatches and unindexed outputs.

        Rendered figures (``.png``) are products of the indexed plot scripts
        and are not listed.
        """
        problems = []
        root = Path(self.directory)
        listed = set()
        for entry in self.files:
            listed.add(entry.path)
            p = root / entry.path
            if not p.exists():
                problems.append(f"missing: {entry.path}")
            elif file_digest(p) != entry.sha256:
                problems.append(f"hash mismatch: {entry.path}")
        for p in sorted(root.rglob("*")):
            rel = p.relative_to(root).as_posix()
            if p.is_file() and rel != self.FILENAME and rel not in listed and p.suffix != ".png":
                problems.append(f"not indexed: {rel}")
        return problems
