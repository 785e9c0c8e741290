"""Hot numeric kernels in two flavours: numba loops and vectorized numpy.

Every kernel here operates on plain float64/int64 arrays so the loop
versions compile under ``@njit(cache=True)``.  ``backend.ACTIVE`` decides
which flavour the module-level aliases point at; both stay reachable
through :data:`NUMPY_IMPLS` and :func:`jit_impls` for benchmarking.

Ray-parity kernels cast rays along +x.  Hits on an edge or vertex (an
exact zero in an orientation test, or an exact tie between a hit and a
query abscissa) are resolved by re-casting with a deterministic epsilon
offset, so results do not depend on luck with degenerate geometry.
"""

from __future__ import annotations

import numpy as np

from .backend import using_numba

# Below this the implicit value is treated as underflowed; the query point
# is then indistinguishable from the local origin at float64 precision.
_F_TINY = 1e-290
_MAX_CAST_ATTEMPTS = 12

# ------------------------------------------------------------------ implicit


def implicit_values_numpy(pts, eps1, eps2, ax, ay, az):
    """Inside-outside values for local-frame points ``pts`` of shape (n, 3)."""
    x = np.abs(pts[:, 0]) / ax
    y = np.abs(pts[:, 1]) / ay
    z = np.abs(pts[:, 2]) / az
    xy = x ** (2.0 / eps2) + y ** (2.0 / eps2)
    return xy ** (eps2 / eps1) + z ** (2.0 / eps1)


def _implicit_loop(pts, eps1, eps2, ax, ay, az):
    n = pts.shape[0]
    out = np.empty(n, dtype=np.float64)
    p2 = 2.0 / eps2
    p1 = 2.0 / eps1
    q = eps2 / eps1
    for i in range(n):
        x = abs(pts[i, 0]) / ax
        y = abs(pts[i, 1]) / ay
        z = abs(pts[i, 2]) / az
        xy = x ** p2 + y ** p2
        out[i] = xy ** q + z ** p1
    return out


def radial_values_numpy(pts, eps1, eps2, ax, ay, az):
    """Radial surface distances for local-frame points (mm).

    Points at (or indistinguishably near) the local origin get min scale.
    """
    amin = min(ax, ay, az)
    r = np.sqrt(np.einsum("ij,ij->i", pts, pts))
    f = implicit_values_numpy(pts, eps1, eps2, ax, ay, az)
    origin = (r < 1e-12 * amin) | (f < _F_TINY)
    f_safe = np.where(origin, 1.0, f)
    d = np.abs(r * (1.0 - f_safe ** (-0.5 * eps1)))
    return np.where(origin, amin, d)


def _radial_loop(pts, eps1, eps2, ax, ay, az):
    n = pts.shape[0]
    out = np.empty(n, dtype=np.float64)
    amin = min(ax, min(ay, az))
    p2 = 2.0 / eps2
    p1 = 2.0 / eps1
    q = eps2 / eps1
    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        pz = pts[i, 2]
        r = (px * px + py * py + pz * pz) ** 0.5
        if r < 1e-12 * amin:
            out[i] = amin
            continue
        x = abs(px) / ax
        y = abs(py) / ay
        z = abs(pz) / az
        f = (x ** p2 + y ** p2) ** q + z ** p1
        if f < _F_TINY:
            out[i] = amin
        else:
            out[i] = abs(r * (1.0 - f ** (-0.5 * eps1)))
    return out


# -------------------------------------------------- point-triangle distance


def point_mesh_distance_numpy(verts, faces, pts):
    """Min distance from each query point to a triangle soup."""
    a3 = verts[faces[:, 0]]
    b3 = verts[faces[:, 1]]
    c3 = verts[faces[:, 2]]
    e0 = b3 - a3
    e1 = c3 - a3
    e2 = c3 - b3
    aa = np.einsum("ij,ij->i", e0, e0)
    bb = np.einsum("ij,ij->i", e0, e1)
    cc = np.einsum("ij,ij->i", e1, e1)
    a2 = np.einsum("ij,ij->i", e2, e2)
    det = aa * cc - bb * bb
    ok = det > 1e-300
    out = np.empty(pts.shape[0], dtype=np.float64)
    for i in range(pts.shape[0]):
        dv = pts[i] - a3
        dv2 = pts[i] - b3
        d0 = np.einsum("ij,ij->i", dv, e0)
        d1 = np.einsum("ij,ij->i", dv, e1)
        d2 = np.einsum("ij,ij->i", dv2, e2)
        # face-interior projection where the barycentric solve is sane
        s = np.where(ok, (cc * d0 - bb * d1) / np.where(ok, det, 1.0), -1.0)
        t = np.where(ok, (aa * d1 - bb * d0) / np.where(ok, det, 1.0), -1.0)
        inside = ok & (s >= 0.0) & (t >= 0.0) & (s + t <= 1.0)
        proj = dv - s[:, None] * e0 - t[:, None] * e1
        dface = np.where(inside, np.einsum("ij,ij->i", proj, proj), np.inf)
        u = np.clip(np.where(aa > 0, d0 / np.where(aa > 0, aa, 1.0), 0.0), 0.0, 1.0)
        v = np.clip(np.where(cc > 0, d1 / np.where(cc > 0, cc, 1.0), 0.0), 0.0, 1.0)
        w = np.clip(np.where(a2 > 0, d2 / np.where(a2 > 0, a2, 1.0), 0.0), 0.0, 1.0)
        q0 = dv - u[:, None] * e0
        q1 = dv - v[:, None] * e1
        q2 = dv2 - w[:, None] * e2
        dedge = np.minimum(
            np.einsum("ij,ij->i", q0, q0),
            np.minimum(np.einsum("ij,ij->i", q1, q1), np.einsum("ij,ij->i", q2, q2)),
        )
        out[i] = np.sqrt(min(np.min(dface), np.min(dedge)))
    return out


def _point_mesh_distance_loop(verts, faces, pts):
    n = pts.shape[0]
    nf = faces.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        pz = pts[i, 2]
        best = np.inf
        for f in range(nf):
            ax0 = verts[faces[f, 0], 0]
            ay0 = verts[faces[f, 0], 1]
            az0 = verts[faces[f, 0], 2]
            bx0 = verts[faces[f, 1], 0]
            by0 = verts[faces[f, 1], 1]
            bz0 = verts[faces[f, 1], 2]
            cx0 = verts[faces[f, 2], 0]
            cy0 = verts[faces[f, 2], 1]
            cz0 = verts[faces[f, 2], 2]
            e0x = bx0 - ax0
            e0y = by0 - ay0
            e0z = bz0 - az0
            e1x = cx0 - ax0
            e1y = cy0 - ay0
            e1z = cz0 - az0
            dvx = px - ax0
            dvy = py - ay0
            dvz = pz - az0
            aa = e0x * e0x + e0y * e0y + e0z * e0z
            bb = e0x * e1x + e0y * e1y + e0z * e1z
            cc = e1x * e1x + e1y * e1y + e1z * e1z
            d0 = dvx * e0x + dvy * e0y + dvz * e0z
            d1 = dvx * e1x + dvy * e1y + dvz * e1z
            det = aa * cc - bb * bb
            if det > 1e-300:
                s = (cc * d0 - bb * d1) / det
                t = (aa * d1 - bb * d0) / det
                if s >= 0.0 and t >= 0.0 and s + t <= 1.0:
                    qx = dvx - s * e0x - t * e1x
                    qy = dvy - s * e0y - t * e1y
                    qz = dvz - s * e0z - t * e1z
                    dd = qx * qx + qy * qy + qz * qz
                    if dd < best:
                        best = dd
                    continue
            # closest point lies on the boundary: test the three edges
            if aa > 0.0:
                u = d0 / aa
            else:
                u = 0.0
            u = min(1.0, max(0.0, u))
            qx = dvx - u * e0x
            qy = dvy - u * e0y
            qz = dvz - u * e0z
            dd = qx * qx + qy * qy + qz * qz
            if dd < best:
                best = dd
            if cc > 0.0:
                v = d1 / cc
            else:
                v = 0.0
            v = min(1.0, max(0.0, v))
            qx = dvx - v * e1x
            qy = dvy - v * e1y
            qz = dvz - v * e1z
            dd = qx * qx + qy * qy + qz * qz
            if dd < best:
                best = dd
            e2x = cx0 - bx0
            e2y = cy0 - by0
            e2z = cz0 - bz0
            a2 = e2x * e2x + e2y * e2y + e2z * e2z
            wvx = px - bx0
            wvy = py - by0
            wvz = pz - bz0
            if a2 > 0.0:
                w = (wvx * e2x + wvy * e2y + wvz * e2z) / a2
            else:
                w = 0.0
            w = min(1.0, max(0.0, w))
            qx = wvx - w * e2x
            qy = wvy - w * e2y
            qz = wvz - w * e2z
            dd = qx * qx + qy * qy + qz * qz
            if dd < best:
                best = dd
        out[i] = best ** 0.5
    return out


# ------------------------------------------------------- ray parity: points


def points_inside_mesh_numpy(verts, faces, pts):
    """Parity test along +x rays; True where a point lies inside the mesh."""
    a3 = verts[faces[:, 0]]
    b3 = verts[faces[:, 1]]
    c3 = verts[faces[:, 2]]
    span = np.max(verts, axis=0) - np.min(verts, axis=0)
    jit = 1e-6 * max(float(np.max(span)), 1e-9)
    out = np.zeros(pts.shape[0], dtype=bool)
    for i in range(pts.shape[0]):
        px, py, pz = pts[i]
        for attempt in range(_MAX_CAST_ATTEMPTS):
            yr = py + jit * attempt
            zr = pz + 0.7 * jit * attempt
            u0y = a3[:, 1] - yr
            u0z = a3[:, 2] - zr
            u1y = b3[:, 1] - yr
            u1z = b3[:, 2] - zr
            u2y = c3[:, 1] - yr
            u2z = c3[:, 2] - zr
            c0 = u0y * u1z - u0z * u1y
            c1 = u1y * u2z - u1z * u2y
            c2 = u2y * u0z - u2z * u0y
            area2 = c0 + c1 + c2
            # faces seen edge-on project to zero area; a +x ray cannot cross
            # them transversally, the adjacent faces carry the parity
            live = np.abs(area2) > 1e-12 * (np.abs(c0) + np.abs(c1) + np.abs(c2))
            if np.any(((c0 == 0.0) | (c1 == 0.0) | (c2 == 0.0)) & live):
                continue
            hit = (
                ((c0 > 0) & (c1 > 0) & (c2 > 0)) | ((c0 < 0) & (c1 < 0) & (c2 < 0))
            ) & live
            if not np.any(hit):
                out[i] = False
                break
            denom = area2[hit]
            xh = (
                c1[hit] * a3[hit, 0] + c2[hit] * b3[hit, 0] + c0[hit] * c3[hit, 0]
            ) / denom
            if np.any(xh == px):
                out[i] = False  # crossing at the ray origin: point on surface
            else:
                out[i] = bool(np.count_nonzero(xh > px) % 2)
            break
        else:
            out[i] = False
    return out


def _points_inside_mesh_loop(verts, faces, pts):
    n = pts.shape[0]
    nf = faces.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    span = 0.0
    for k in range(3):
        lo = verts[0, k]
        hi = verts[0, k]
        for m in range(verts.shape[0]):
            v = verts[m, k]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        if hi - lo > span:
            span = hi - lo
    jit = 1e-6 * max(span, 1e-9)
    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        pz = pts[i, 2]
        for attempt in range(_MAX_CAST_ATTEMPTS):
            yr = py + jit * attempt
            zr = pz + 0.7 * jit * attempt
            crossings = 0
            ambiguous = False
            on_surface = False
            for f in range(nf):
                a0y = verts[faces[f, 0], 1] - yr
                a0z = verts[faces[f, 0], 2] - zr
                b0y = verts[faces[f, 1], 1] - yr
                b0z = verts[faces[f, 1], 2] - zr
                c0y = verts[faces[f, 2], 1] - yr
                c0z = verts[faces[f, 2], 2] - zr
                cr0 = a0y * b0z - a0z * b0y
                cr1 = b0y * c0z - b0z * c0y
                cr2 = c0y * a0z - c0z * a0y
                denom = cr0 + cr1 + cr2
                if abs(denom) <= 1e-12 * (abs(cr0) + abs(cr1) + abs(cr2)):
                    continue  # edge-on face; adjacent faces carry the parity
                if cr0 == 0.0 or cr1 == 0.0 or cr2 == 0.0:
                    ambiguous = True
                    break
                pos = cr0 > 0.0 and cr1 > 0.0 and cr2 > 0.0
                neg = cr0 < 0.0 and cr1 < 0.0 and cr2 < 0.0
                if not (pos or neg):
                    continue
                xh = (
                    cr1 * verts[faces[f, 0], 0]
                    + cr2 * verts[faces[f, 1], 0]
                    + cr0 * verts[faces[f, 2], 0]
                ) / denom
                if xh == px:
                    on_surface = True
                    break
                if xh > px:
                    crossings += 1
            if on_surface:
                out[i] = False
                break
            if not ambiguous:
                out[i] = crossings % 2 == 1
                break
    return out


# -------------------------------------------------- ray parity: voxel fill


def _column_bins(verts, faces, origin_y, origin_z, voxel, ny, nz):
    """CSR map from (iy, iz) ray columns to candidate triangle indices."""
    ymin = np.minimum(
        np.minimum(verts[faces[:, 0], 1], verts[faces[:, 1], 1]), verts[faces[:, 2], 1]
    )
    ymax = np.maximum(
        np.maximum(verts[faces[:, 0], 1], verts[faces[:, 1], 1]), verts[faces[:, 2], 1]
    )
    zmin = np.minimum(
        np.minimum(verts[faces[:, 0], 2], verts[faces[:, 1], 2]), verts[faces[:, 2], 2]
    )
    zmax = np.maximum(
        np.maximum(verts[faces[:, 0], 2], verts[faces[:, 1], 2]), verts[faces[:, 2], 2]
    )
    # one-bin slop so jittered rays still see their triangles
    iy0 = np.clip(np.floor((ymin - origin_y) / voxel - 0.5).astype(np.int64) - 1, 0, ny - 1)
    iy1 = np.clip(np.ceil((ymax - origin_y) / voxel - 0.5).astype(np.int64) + 1, 0, ny - 1)
    iz0 = np.clip(np.floor((zmin - origin_z) / voxel - 0.5).astype(np.int64) - 1, 0, nz - 1)
    iz1 = np.clip(np.ceil((zmax - origin_z) / voxel - 0.5).astype(np.int64) + 1, 0, nz - 1)
    ky = iy1 - iy0 + 1
    kz = iz1 - iz0 + 1
    counts = ky * kz
    total = int(np.sum(counts))
    tri = np.repeat(np.arange(faces.shape[0], dtype=np.int64), counts)
    # enumerate each face's (iy, iz) rectangle in row-major order
    local = np.arange(total, dtype=np.int64) - np.repeat(
        np.cumsum(counts) - counts, counts
    )
    rep_kz = np.repeat(kz, counts)
    dy = local // rep_kz
    dz = local - dy * rep_kz
    col = (np.repeat(iy0, counts) + dy) * nz + (np.repeat(iz0, counts) + dz)
    order = np.argsort(col, kind="stable")
    col = col[order]
    tri = tri[order]
    offsets = np.searchsorted(col, np.arange(ny * nz + 1, dtype=np.int64))
    return offsets, tri


def voxel_fill_numpy(verts, faces, origin, voxel, nx, ny, nz):
    """Solid occupancy of a closed mesh on a snapped voxel grid."""
    occ = np.zeros((nx, ny, nz), dtype=bool)
    if faces.shape[0] == 0:
        return occ
    offsets, tri = _column_bins(verts, faces, origin[1], origin[2], voxel, ny, nz)
    a3 = verts[faces[:, 0]]
    b3 = verts[faces[:, 1]]
    c3 = verts[faces[:, 2]]
    xs = origin[0] + (np.arange(nx) + 0.5) * voxel
    jit = 1e-6 * voxel
    for iy in range(ny):
        yc = origin[1] + (iy + 0.5) * voxel
        for iz in range(nz):
            lo = offsets[iy * nz + iz]
            hi = offsets[iy * nz + iz + 1]
            if hi == lo:
                continue
            sub = tri[lo:hi]
            zc = origin[2] + (iz + 0.5) * voxel
            for attempt in range(_MAX_CAST_ATTEMPTS):
                yr = yc + jit * attempt
                zr = zc + 0.7 * jit * attempt
                c0 = (a3[sub, 1] - yr) * (b3[sub, 2] - zr) - (a3[sub, 2] - zr) * (
                    b3[sub, 1] - yr
                )
                c1 = (b3[sub, 1] - yr) * (c3[sub, 2] - zr) - (b3[sub, 2] - zr) * (
                    c3[sub, 1] - yr
                )
                c2 = (c3[sub, 1] - yr) * (a3[sub, 2] - zr) - (c3[sub, 2] - zr) * (
                    a3[sub, 1] - yr
                )
                area2 = c0 + c1 + c2
                live = np.abs(area2) > 1e-12 * (np.abs(c0) + np.abs(c1) + np.abs(c2))
                if np.any(((c0 == 0.0) | (c1 == 0.0) | (c2 == 0.0)) & live):
                    continue
                hit = (
                    ((c0 > 0) & (c1 > 0) & (c2 > 0)) | ((c0 < 0) & (c1 < 0) & (c2 < 0))
                ) & live
                if not np.any(hit):
                    break
                denom = area2[hit]
                xh = np.sort(
                    (
                        c1[hit] * a3[sub[hit], 0]
                        + c2[hit] * b3[sub[hit], 0]
                        + c0[hit] * c3[sub[hit], 0]
                    )
                    / denom
                )
                left = np.searchsorted(xh, xs, side="left")
                right = np.searchsorted(xh, xs, side="right")
                # a center with a crossing exactly on it sits on the surface
                # and is not inside; jitter cannot move hits along x
                occ[:, iy, iz] = ((left % 2) == 1) & (left == right)
                break
    return occ


def _voxel_fill_loop(verts, faces, origin, voxel, nx, ny, nz, offsets, tri):
    occ = np.zeros((nx, ny, nz), dtype=np.bool_)
    jit = 1e-6 * voxel
    maxtri = 0
    for c in range(ny * nz):
        k = offsets[c + 1] - offsets[c]
        if k > maxtri:
            maxtri = k
    buf = np.empty(maxtri, dtype=np.float64)
    for iy in range(ny):
        yc = origin[1] + (iy + 0.5) * voxel
        for iz in range(nz):
            lo = offsets[iy * nz + iz]
            hi = offsets[iy * nz + iz + 1]
            if hi == lo:
                continue
            zc = origin[2] + (iz + 0.5) * voxel
            for attempt in range(_MAX_CAST_ATTEMPTS):
                yr = yc + jit * attempt
                zr = zc + 0.7 * jit * attempt
                nhit = 0
                ambiguous = False
                for s in range(lo, hi):
                    f = tri[s]
                    a0y = verts[faces[f, 0], 1] - yr
                    a0z = verts[faces[f, 0], 2] - zr
                    b0y = verts[faces[f, 1], 1] - yr
                    b0z = verts[faces[f, 1], 2] - zr
                    c0y = verts[faces[f, 2], 1] - yr
                    c0z = verts[faces[f, 2], 2] - zr
                    cr0 = a0y * b0z - a0z * b0y
                    cr1 = b0y * c0z - b0z * c0y
                    cr2 = c0y * a0z - c0z * a0y
                    denom = cr0 + cr1 + cr2
                    if abs(denom) <= 1e-12 * (abs(cr0) + abs(cr1) + abs(cr2)):
                        continue  # edge-on face; adjacent faces carry the parity
                    if cr0 == 0.0 or cr1 == 0.0 or cr2 == 0.0:
                        ambiguous = True
                        break
                    pos = cr0 > 0.0 and cr1 > 0.0 and cr2 > 0.0
                    neg = cr0 < 0.0 and cr1 < 0.0 and cr2 < 0.0
                    if not (pos or neg):
                        continue
                    buf[nhit] = (
                        cr1 * verts[faces[f, 0], 0]
                        + cr2 * verts[faces[f, 1], 0]
                        + cr0 * verts[faces[f, 2], 0]
                    ) / denom
                    nhit += 1
                if ambiguous:
                    continue
                if nhit == 0:
                    break
                hits = np.sort(buf[:nhit])
                ptr = 0
                parity = False
                for ix in range(nx):
                    xc = origin[0] + (ix + 0.5) * voxel
                    while ptr < nhit and hits[ptr] < xc:
                        ptr += 1
                        parity = not parity
                    if ptr < nhit and hits[ptr] == xc:
                        # crossing exactly on the center: on-surface, not inside
                        occ[ix, iy, iz] = False
                    else:
                        occ[ix, iy, iz] = parity
                break
    return occ


def voxel_fill_jit_wrapper(jitted):
    """Bind the CSR binning (plain numpy) to the jitted parity fill."""

    def voxel_fill(verts, faces, origin, voxel, nx, ny, nz):
        if faces.shape[0] == 0:
            return np.zeros((nx, ny, nz), dtype=bool)
        offsets, tri = _column_bins(verts, faces, origin[1], origin[2], voxel, ny, nz)
        return jitted(verts, faces, origin, voxel, nx, ny, nz, offsets, tri)

    return voxel_fill


# ------------------------------------------------------------- dispatch

NUMPY_IMPLS = {
    "implicit_values": implicit_values_numpy,
    "radial_values": radial_values_numpy,
    "point_mesh_distance": point_mesh_distance_numpy,
    "points_inside_mesh": points_inside_mesh_numpy,
    "voxel_fill": voxel_fill_numpy,
}

_JIT_IMPLS = None


def jit_impls():
    """Compile (lazily, with an on-disk cache) the numba kernel set."""
    global _JIT_IMPLS
    if _JIT_IMPLS is None:
        from numba import njit

        jj = njit(cache=True)
        _JIT_IMPLS = {
            "implicit_values": jj(_implicit_loop),
            "radial_values": jj(_radial_loop),
            "point_mesh_distance": jj(_point_mesh_distance_loop),
            "points_inside_mesh": jj(_points_inside_mesh_loop),
            "voxel_fill": voxel_fill_jit_wrapper(jj(_voxel_fill_loop)),
        }
    return _JIT_IMPLS


if using_numba():
    _sel = jit_impls()
else:
    _sel = NUMPY_IMPLS

implicit_values = _sel["implicit_values"]
radial_values = _sel["radial_values"]
point_mesh_distance = _sel["point_mesh_distance"]
points_inside_mesh = _sel["points_inside_mesh"]
voxel_fill = _sel["voxel_fill"]
