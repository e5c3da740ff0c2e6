"""Plain-text writers: commented CSV tables and legacy VTK dumps."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def header_lines(meta: Mapping | None) -> list[str]:
    if not meta:
        return []
    return [f"# {key} = {fmt(val)}" for key, val in meta.items()]


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], meta: Mapping | None = None) -> Path:
    """Write rows as CSV preceded by '# key = value' comment lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = header_lines(meta)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Return (meta, columns, rows) with rows as lists of strings."""
    meta, rows, cols = {}, [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            meta[key.strip()] = val.strip()
        elif cols is None:
            cols = line.split(",")
        elif line:
            rows.append(line.split(","))
    return meta, cols, rows


# ------------------------------------------------------------------ VTK

def _vtk_order(arr, dim):
    """C-ordered grid array -> flat array with x varying fastest."""
    axes = tuple(reversed(range(dim)))
    return np.transpose(arr, axes + tuple(range(dim, arr.ndim))).reshape(-1, *arr.shape[dim:])


def write_vtk(path, shape, origin, h, arrays: Mapping[str, np.ndarray], title: str) -> Path:
    """Legacy ASCII STRUCTURED_POINTS file with cell-centre samples as point data.

    arrays maps names to grid arrays of shape `shape` or `shape + (ncomp,)`.
    Multi-component arrays go into a FIELD block, one entry per component.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dim = len(shape)
    dims = list(shape) + [1] * (3 - dim)
    org = list(np.asarray(origin, dtype=float)) + [0.0] * (3 - dim)
    npts = int(np.prod(shape))
    out = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET STRUCTURED_POINTS",
           "DIMENSIONS " + " ".join(str(d) for d in dims),
           "ORIGIN " + " ".join(fmt(o) for o in org),
           "SPACING " + " ".join(fmt(h) for _ in range(3)),
           f"POINT_DATA {npts}"]
    fields = {k: v for k, v in arrays.items() if v.ndim == dim + 1}
    scalars = {k: v for k, v in arrays.items() if v.ndim == dim}
    for name, arr in fields.items():
        flat = _vtk_order(arr, dim)
        ncomp = flat.shape[1]
        out.append(f"FIELD {name} {ncomp}")
        for j in range(ncomp):
            out.append(f"{name}{j} 1 {npts} double")
            out.extend(fmt(v) for v in flat[:, j])
    for name, arr in scalars.items():
        flat = _vtk_order(arr, dim)
        kind = "int" if np.issubdtype(arr.dtype, np.integer) else "double"
        out.append(f"SCALARS {name} {kind} 1")
        out.append("LOOKUP_TABLE default")
        out.extend(fmt(v) for v in flat)
    path.write_text("\n".join(out) + "\n")
    return path


def read_vtk(path):
    """Parse a file written by write_vtk.

    Returns (title, dims, origin, spacing, arrays) where arrays are flat in
    file order (x fastest) and multi-component FIELD blocks are stacked.
    """
    tokens = Path(path).read_text().splitlines()
    title = tokens[1]
    pos = 4
    dims = [int(t) for t in tokens[pos].split()[1:]]
    origin = [float(t) for t in tokens[pos + 1].split()[1:]]
    spacing = [float(t) for t in tokens[pos + 2].split()[1:]]
    npts = int(tokens[pos + 3].split()[1])
    pos += 4
    arrays = {}
    while pos < len(tokens):
        head = tokens[pos].split()
        if not head:
            pos += 1
            continue
        if head[0] == "FIELD":
            name, ncomp = head[1], int(head[2])
            pos += 1
            comps = []
            for _ in range(ncomp):
                pos += 1
                comps.append(np.array(tokens[pos:pos + npts], dtype=float))
                pos += npts
            arrays[name] = np.stack(comps, axis=1)
        elif head[0] == "SCALARS":
            name, kind = head[1], head[2]
            pos += 2
            vals = np.array(tokens[pos:pos + npts], dtype=int if kind == "int" else float)
            arrays[name] = vals
            pos += npts
        else:
            raise ValueError(f"unexpected VTK line: {tokens[pos]!r}")
    return title, dims, origin, spacing, arrays
