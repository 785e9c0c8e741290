"""Readers and writers for the interchange formats.

* OBJ: ASCII ``v x y z`` / ``f i j k`` with 1-based indices; polygonal
  faces are fan-triangulated on read, extra vertex attributes ignored.
* PLY: ASCII 1.0 only; binary files are rejected with a clear error.
  Vertex-only PLY files load as meshes with an empty face list.
* Point clouds: plain text, one ``x y z`` per line.
* Superquadric parameters: the JSON object with keys eps1, eps2, scale,
  rotation_axis_angle, translation (mm and radians).
"""

from __future__ import annotations

import json
import os

import numpy as np

from .core import InputError, Superquadric
from .mesh import PointCloud, TriangleMesh


def _fan(indices: list[int]) -> list[tuple[int, int, int]]:
    return [(indices[0], indices[k], indices[k + 1]) for k in range(1, len(indices) - 1)]


def read_obj(path) -> TriangleMesh:
    verts: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            try:
                if tag == "v":
                    verts.append([float(p) for p in parts[1:4]])
                    if len(verts[-1]) != 3:
                        raise ValueError("vertex needs 3 coordinates")
                elif tag == "f":
                    idx = []
                    for p in parts[1:]:
                        i = int(p.split("/")[0])
                        if i < 1:
                            raise ValueError(f"index {i} not positive 1-based")
                        idx.append(i - 1)
                    if len(idx) < 3:
                        raise ValueError("face needs at least 3 indices")
                    faces.extend(_fan(idx))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad OBJ line: {exc}") from exc
    if not verts:
        raise InputError(f"{path}: no vertices found")
    try:
        return TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64).reshape(-1, 3))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_obj(path, mesh: TriangleMesh) -> None:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_ply(path) -> TriangleMesh:
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: binary PLY is unsupported; use format ascii 1.0") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise InputError(f"{path}: not a PLY file")
    elements: list[tuple[str, int, list[str], bool]] = []  # name, count, scalar props, has list
    fmt_seen = False
    cursor = 1
    while cursor < len(lines):
        parts = lines[cursor].split()
        cursor += 1
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            if parts[1:] != ["ascii", "1.0"]:
                raise InputError(
                    f"{path}: format {' '.join(parts[1:])!r} unsupported; use format ascii 1.0"
                )
            fmt_seen = True
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), [], False))
        elif parts[0] == "property":
            if not elements:
                raise InputError(f"{path}: property before element")
            name, count, props, has_list = elements[-1]
            if parts[1] == "list":
                elements[-1] = (name, count, props, True)
            else:
                props.append(parts[-1])
        elif parts[0] == "end_header":
            break
        else:
            raise InputError(f"{path}: unexpected header line {lines[cursor - 1]!r}")
    else:
        raise InputError(f"{path}: missing end_header")
    if not fmt_seen:
        raise InputError(f"{path}: missing format line; use format ascii 1.0")

    verts = None
    faces: list[tuple[int, int, int]] = []
    for name, count, props, has_list in elements:
        body = lines[cursor : cursor + count]
        if len(body) < count:
            raise InputError(f"{path}: truncated element {name!r}")
        cursor += count
        if name == "vertex":
            try:
                ix, iy, iz = props.index("x"), props.index("y"), props.index("z")
            except ValueError as exc:
                raise InputError(f"{path}: vertex element lacks x/y/z") from exc
            verts = np.empty((count, 3))
            for i, row in enumerate(body):
                vals = row.split()
                try:
                    verts[i] = (float(vals[ix]), float(vals[iy]), float(vals[iz]))
                except (ValueError, IndexError) as exc:
                    raise InputError(f"{path}: bad vertex row {row!r}") from exc
        elif name == "face":
            for row in body:
                vals = row.split()
                try:
                    k = int(vals[0])
                    idx = [int(v) for v in vals[1 : 1 + k]]
                except (ValueError, IndexError) as exc:
                    raise InputError(f"{path}: bad face row {row!r}") from exc
                if len(idx) != k or k < 3:
                    raise InputError(f"{path}: bad face row {row!r}")
                faces.extend(_fan(idx))
    if verts is None:
        raise InputError(f"{path}: no vertex element")
    try:
        return TriangleMesh(verts, np.array(faces, dtype=np.int64).reshape(-1, 3))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def read_xyz(path) -> PointCloud:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) < 3:
                raise InputError(f"{path}:{lineno}: expected x y z")
            try:
                rows.append([float(p) for p in parts[:3]])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad number: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty point cloud")
    return PointCloud(np.array(rows))


def write_xyz(path, points) -> None:
    pts = points.points if isinstance(points, PointCloud) else np.asarray(points)
    lines = [f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}" for p in pts]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_joints(path) -> np.ndarray:
    """A 21-joint hand pose as an (21, 3) array in mm."""
    pts = read_xyz(path).points
    if pts.shape[0] != 21:
        raise InputError(f"{path}: expected 21 joints, found {pts.shape[0]}")
    return pts


def read_theta(path) -> Superquadric:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return Superquadric.from_dict(data)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_theta(path, sq: Superquadric) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sq.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


_MESH_EXTS = {".obj", ".ply"}


def load_mesh(path) -> TriangleMesh:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".obj":
        return read_obj(path)
    if ext == ".ply":
        return read_ply(path)
    raise InputError(f"{path}: unsupported mesh format {ext!r} (use .obj or .ply)")


def load_shape(path):
    """A fit target: superquadric JSON, a mesh, or a raw point cloud."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".json":
        return read_theta(path)
    if ext in _MESH_EXTS:
        return load_mesh(path)
    return read_xyz(path)
