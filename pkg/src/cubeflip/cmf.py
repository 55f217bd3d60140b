"""CMF text format and OFF/OBJ export.

A CMF document is one JSON object per line::

    {"dim": 2, "vertex_count": 8, "coords": null, "boundary_vertices": null,
     "cells": [[0, 2, 6, 4], ...]}

Serialization writes exactly one line with a fixed key order, so parsing and
re-serializing is byte-stable.  Floats use Python's shortest round-trip repr.
"""

import json

from .complex import ARITY, CubicalComplex, boundary_faces
from .errors import ParseError

KEYS = ("dim", "vertex_count", "coords", "boundary_vertices", "cells")


def serialize(c):
    doc = {
        "dim": c.dim,
        "vertex_count": c.vertex_count,
        "coords": None if c.coords is None else [list(p) for p in c.coords],
        "boundary_vertices": None if c.boundary_vertices is None else sorted(c.boundary_vertices),
        "cells": [list(cell) for cell in c.cells],
    }
    return json.dumps(doc, separators=(", ", ": ")) + "\n"


def _int(x, line, fld):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"expected integer, got {x!r}", line, fld)
    return x


def parse(text):
    """Parse a single CMF document; blank lines and ``#`` comments are skipped."""
    docs = parse_all(text)
    if len(docs) != 1:
        raise ParseError(f"expected exactly one mesh, found {len(docs)}")
    return docs[0]


def parse_all(text):
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}", lineno) from None
        out.append(_from_doc(doc, lineno))
    return out


def _from_doc(doc, line):
    if not isinstance(doc, dict):
        raise ParseError("mesh record must be a JSON object", line)
    for k in ("dim", "vertex_count", "cells"):
        if k not in doc:
            raise ParseError("missing required key", line, k)
    extra = set(doc) - set(KEYS)
    if extra:
        raise ParseError(f"unknown keys {sorted(extra)}", line)
    dim = _int(doc["dim"], line, "dim")
    if dim not in ARITY:
        raise ParseError(f"dim must be 2 or 3, got {dim}", line, "dim")
    nv = _int(doc["vertex_count"], line, "vertex_count")
    if nv < 0:
        raise ParseError("vertex_count must be non-negative", line, "vertex_count")
    cells = doc["cells"]
    if not isinstance(cells, list):
        raise ParseError("cells must be a list", line, "cells")
    k = ARITY[dim]
    parsed = []
    for i, cell in enumerate(cells):
        fld = f"cells[{i}]"
        if not isinstance(cell, list) or len(cell) != k:
            n = len(cell) if isinstance(cell, list) else "non-list"
            raise ParseError(f"dim-{dim} cell needs {k} vertex ids, got {n}", line, fld)
        ids = [_int(v, line, fld) for v in cell]
        if any(not 0 <= v < nv for v in ids):
            raise ParseError("vertex id out of range", line, fld)
        parsed.append(tuple(ids))
    coords = doc.get("coords")
    if coords is not None:
        if not isinstance(coords, list) or len(coords) != nv:
            raise ParseError("coords must list one point per vertex", line, "coords")
        for i, p in enumerate(coords):
            if not isinstance(p, list) or len(p) != 3 or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in p
            ):
                raise ParseError("point must be three numbers", line, f"coords[{i}]")
    bv = doc.get("boundary_vertices")
    if bv is not None:
        if not isinstance(bv, list):
            raise ParseError("boundary_vertices must be a list", line, "boundary_vertices")
        bv = [_int(v, line, "boundary_vertices") for v in bv]
        if any(not 0 <= v < nv for v in bv):
            raise ParseError("vertex id out of range", line, "boundary_vertices")
        bv = frozenset(bv)
    return CubicalComplex(dim, nv, parsed, bv, coords)


def read(path):
    with open(path) as fh:
        return parse(fh.read())


def write(c, path):
    with open(path, "w") as fh:
        fh.write(serialize(c))


def _surface_faces(c):
    if c.dim == 2:
        return list(c.cells)
    return sorted(boundary_faces(c), key=sorted)


def _points(c):
    if c.coords is not None:
        return c.coords
    return [(0.0, 0.0, 0.0)] * c.vertex_count


def to_off(c):
    faces = _surface_faces(c)
    lines = ["OFF", f"{c.vertex_count} {len(faces)} 0"]
    lines += [" ".join(repr(x) for x in p) for p in _points(c)]
    lines += ["4 " + " ".join(str(v) for v in f) for f in faces]
    return "\n".join(lines) + "\n"


def to_obj(c):
    lines = [f"v {' '.join(repr(x) for x in p)}" for p in _points(c)]
    lines += ["f " + " ".join(str(v + 1) for v in f) for f in _surface_faces(c)]
    return "\n".join(lines) + "\n"
