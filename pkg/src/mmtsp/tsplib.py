"""TSPLIB instance parsing and exact Euclidean distances."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


class TsplibError(ValueError):
    """Raised when a TSPLIB file cannot be parsed."""


@dataclass(frozen=True, eq=False)
class Instance:
    """A single-depot problem: coordinates plus the precomputed distance matrix.

    City indices are 0-based; ``labels`` keeps the node numbers from the file
    so reports can use them.
    """

    name: str
    coords: np.ndarray
    depot: int = 0
    labels: tuple[int, ...] = ()
    dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError(f"coords must have shape (n, 2), got {coords.shape}")
        n = coords.shape[0]
        if n < 2:
            raise ValueError(f"an instance needs at least 2 cities, got {n}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        if not 0 <= self.depot < n:
            raise ValueError(f"depot {self.depot} out of range for n={n}")
        labels = tuple(self.labels) if self.labels else tuple(range(1, n + 1))
        if len(labels) != n:
            raise ValueError("labels must have one entry per city")
        coords.setflags(write=False)
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])  # no underflow for tiny gaps
        dist.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", dist)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def customers(self) -> tuple[int, ...]:
        """Non-depot city indices in ascending order."""
        return tuple(i for i in range(self.n) if i != self.depot)

    def distance(self, i: int, j: int) -> float:
        return distance(self, i, j)


def distance(inst: Instance, i: int, j: int) -> float:
    """Unrounded Euclidean distance between cities ``i`` and ``j``."""
    n = inst.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"city index out of range for n={n}: ({i}, {j})")
    return float(inst.dist[i, j])


_SUPPORTED_WEIGHTS = {"EUC_2D"}


def parse_tsplib(text: str, name: str | None = None) -> Instance:
    """Parse the text of a EUC_2D TSPLIB file.

    The first node listed becomes the depot.
    """
    header: dict[str, str] = {}
    coords: list[tuple[float, float]] = []
    labels: list[int] = []
    in_coords = False
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_coords:
            parts = line.split()
            if len(parts) == 3:
                try:
                    labels.append(int(parts[0]))
                    coords.append((float(parts[1]), float(parts[2])))
                    continue
                except ValueError:
                    pass
            elif len(parts) == 1 and parts[0].endswith("_SECTION"):
                raise TsplibError(f"line {lineno}: unsupported section {parts[0]!r}")
            if ":" in line:
                # a header keyword after the coordinate block ends it
                in_coords = False
            else:
                raise TsplibError(f"line {lineno}: malformed coordinate line {raw!r}")
        if line.startswith("NODE_COORD_SECTION"):
            in_coords = True
            continue
        if ":" not in line:
            if line.endswith("_SECTION"):
                raise TsplibError(f"line {lineno}: unsupported section {line!r}")
            raise TsplibError(f"line {lineno}: malformed header line {raw!r}")
        key, _, value = line.partition(":")
        header[key.strip().upper()] = value.strip()

    weight_type = header.get("EDGE_WEIGHT_TYPE")
    if weight_type is None:
        raise TsplibError("missing EDGE_WEIGHT_TYPE header")
    if weight_type not in _SUPPORTED_WEIGHTS:
        raise TsplibError(f"unsupported EDGE_WEIGHT_TYPE {weight_type!r} (only EUC_2D)")
    if "DIMENSION" not in header:
        raise TsplibError("missing DIMENSION header")
    try:
        dim = int(header["DIMENSION"])
    except ValueError:
        raise TsplibError(f"DIMENSION is not an integer: {header['DIMENSION']!r}") from None
    if not coords:
        raise TsplibError("missing NODE_COORD_SECTION entries")
    if len(coords) != dim:
        raise TsplibError(f"DIMENSION is {dim} but {len(coords)} coordinate lines were read")
    if len(set(labels)) != len(labels):
        raise TsplibError("duplicate node numbers in NODE_COORD_SECTION")
    return Instance(
        name=header.get("NAME", name or "unnamed"),
        coords=np.array(coords, dtype=np.float64),
        depot=0,
        labels=tuple(labels),
    )


def to_tsplib(inst: Instance) -> str:
    """Serialize an instance back to TSPLIB text (``repr`` keeps floats exact)."""
    out = [
        f"NAME : {inst.name}",
        "TYPE : TSP",
        f"DIMENSION : {inst.n}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        "NODE_COORD_SECTION",
    ]
    for label, (x, y) in zip(inst.labels, inst.coords):
        out.append(f"{label} {float(x)!r} {float(y)!r}")
    out.append("EOF")
    return "\n".join(out) + "\n"


def read_instance(path: str | os.PathLike) -> Instance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TsplibError(f"cannot read {path}: {exc}") from exc
    return parse_tsplib(text, name=path.stem)


BUNDLED = ("eil51", "berlin52", "eil76")


def find_instance(name_or_path: str | os.PathLike) -> Path:
    """Resolve a file path, or a bare instance name.

    Bare names are looked up in ``$MMTSP_DATA`` first, then in the bundled data.
    """
    path = Path(name_or_path)
    if path.suffix == ".tsp" or path.exists():
        if not path.exists():
            raise FileNotFoundError(f"no such instance file: {path}")
        return path
    fname = f"{path.name}.tsp"
    extra = os.environ.get("MMTSP_DATA")
    if extra:
        candidate = Path(extra) / fname
        if candidate.exists():
            return candidate
    bundled = resources.files("mmtsp") / "data" / fname
    if bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(
        f"instance {path.name!r} not found in $MMTSP_DATA or bundled data {BUNDLED}"
    )


def load_instance(name_or_path: str | os.PathLike) -> Instance:
    return read_instance(find_instance(name_or_path))
