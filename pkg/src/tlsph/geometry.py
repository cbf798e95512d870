"""Particle generation: lattice boxes, STL ingestion and lattice fill.

Bodies are sampled on a cell-centered cubic lattice (one particle per dp^3
cell).  Arbitrary shapes come from triangle meshes: a candidate lattice
spans the bounding box and a point is kept when a ray cast from it crosses
the surface an odd number of times.
"""

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import StlParseError, WatertightnessError


# ---------------------------------------------------------------------------
# regions and lattice boxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BodyRegion:
    """Tagged predicate over reference positions (clamp | prescribed | probe)."""

    tag: str
    predicate: object  # callable (n, 3) -> bool mask

    def contains(self, points):
        mask = np.asarray(self.predicate(np.asarray(points, dtype=np.float64)))
        return mask.astype(bool)


def box_region(lo, hi, tag):
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)

    def predicate(points):
        return np.all((points >= lo) & (points <= hi), axis=1)

    return BodyRegion(tag=tag, predicate=predicate)


def slab_region(axis, lo, hi, tag):
    """All points with lo <= x[axis] <= hi."""

    def predicate(points):
        return (points[:, axis] >= lo) & (points[:, axis] <= hi)

    return BodyRegion(tag=tag, predicate=predicate)


def _axis_count(extent, dp):
    return int(np.floor(extent / dp + 0.5))


def generate_lattice_box(extents, dp, origin=(0.0, 0.0, 0.0), rho0=1.0):
    """Cell-centered lattice filling a box.

    Particle count per axis is round(extent / dp); positions sit at
    origin + (index + 1/2) dp, so counts are exact whenever the extents
    divide evenly by dp.  Returns (positions, V0, masses) with V0 = dp^3.
    """
    extents = np.asarray(extents, dtype=np.float64)
    if np.any(extents <= 0.0):
        raise ValueError(f"box extents must be positive, got {extents}")
    if dp <= 0.0:
        raise ValueError(f"particle spacing must be positive, got dp = {dp}")
    if np.any(dp > extents):
        raise ValueError(
            f"particle spacing dp = {dp} exceeds box extent {extents.min()}"
        )
    counts = [_axis_count(e, dp) for e in extents]
    axes = [origin[k] + (np.arange(counts[k]) + 0.5) * dp for k in range(3)]
    xx, yy, zz = np.meshgrid(*axes, indexing="ij")
    positions = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
    V0 = np.full(len(positions), dp**3)
    return positions, V0, rho0 * V0


# ---------------------------------------------------------------------------
# triangle meshes and STL
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle surface; watertightness is checked at fill time."""

    vertices: np.ndarray   # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64
    normals: np.ndarray = None  # (T, 3) unit normals, recomputed if omitted
    n_degenerate_dropped: int = 0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int64)
        if t.shape[0] < 1:
            raise ValueError("a mesh needs at least one triangle")
        if not np.isfinite(v).all():
            raise ValueError("mesh vertices must be finite")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if self.normals is None:
            soup = v[t]
            n = np.cross(soup[:, 1] - soup[:, 0], soup[:, 2] - soup[:, 0])
            norm = np.linalg.norm(n, axis=1, keepdims=True)
            norm[norm == 0.0] = 1.0
            object.__setattr__(self, "normals", n / norm)

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def triangle_soup(self):
        return self.vertices[self.triangles]

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def _soup_to_mesh(soup, n_dropped=0):
    """Deduplicate exactly-equal vertices of a (T, 3, 3) triangle soup."""
    flat = soup.reshape(-1, 3)
    view = flat.view([("x", flat.dtype), ("y", flat.dtype), ("z", flat.dtype)])
    _, first, inverse = np.unique(view, return_index=True, return_inverse=True)
    vertices = flat[first]
    triangles = inverse.reshape(-1, 3).astype(np.int64)
    return TriangleMesh(vertices=vertices, triangles=triangles,
                        n_degenerate_dropped=n_dropped)


def _drop_degenerate(soup):
    area2 = np.linalg.norm(
        np.cross(soup[:, 1] - soup[:, 0], soup[:, 2] - soup[:, 0]), axis=1
    )
    keep = area2 > 0.0
    dropped = int((~keep).sum())
    if dropped:
        warnings.warn(f"dropped {dropped} zero-area STL triangle(s)")
    return soup[keep], dropped


_BINARY_HEADER = 80
_RECORD = 50  # 12 float32 + uint16 attribute


def parse_stl(data):
    """Parse ASCII or binary STL bytes into a TriangleMesh.

    Binary layout: 80-byte header, little-endian uint32 triangle count,
    then 50-byte records (normal + 3 vertices as float32, uint16 attribute).
    Zero-area triangles are dropped with a warning.
    """
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise TypeError("parse_stl expects raw bytes")
    data = bytes(data)
    if len(data) == 0:
        raise StlParseError("empty STL payload", byte_offset=0)

    if len(data) >= _BINARY_HEADER + 4:
        (count,) = struct.unpack_from("<I", data, _BINARY_HEADER)
        expected = _BINARY_HEADER + 4 + count * _RECORD
        if expected == len(data) and count > 0:
            return _parse_stl_binary(data, count)

    head = data[:5].lower()
    if head == b"solid":
        return _parse_stl_ascii(data)
    if len(data) < _BINARY_HEADER + 4:
        raise StlParseError(
            "payload too short for a binary STL header", byte_offset=len(data)
        )
    (count,) = struct.unpack_from("<I", data, _BINARY_HEADER)
    expected = _BINARY_HEADER + 4 + count * _RECORD
    raise StlParseError(
        f"binary STL declares {count} triangles ({expected} bytes) but payload "
        f"has {len(data)} bytes",
        byte_offset=min(expected, len(data)),
    )


_RECORD_DTYPE = np.dtype([("geometry", "<f4", (12,)), ("attribute", "<u2")])


def _parse_stl_binary(data, count):
    records = np.frombuffer(data, dtype=_RECORD_DTYPE, count=count,
                            offset=_BINARY_HEADER + 4)
    floats = records["geometry"].astype(np.float64)
    soup = floats[:, 3:12].reshape(-1, 3, 3)
    soup, dropped = _drop_degenerate(soup)
    if soup.shape[0] == 0:
        raise StlParseError("binary STL contains only degenerate triangles")
    return _soup_to_mesh(soup, dropped)


def _parse_stl_ascii(data):
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise StlParseError(f"ASCII STL is not ASCII: {exc}") from None
    triangles = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        key = tokens[0].lower()
        if key == "solid" or key == "endsolid":
            continue
        if key == "facet":
            if current is not None:
                raise StlParseError("nested 'facet' without 'endfacet'", line=lineno)
            current = []
        elif key == "outer":
            if current is None:
                raise StlParseError("'outer loop' outside a facet", line=lineno)
        elif key == "vertex":
            if current is None:
                raise StlParseError("'vertex' outside a facet", line=lineno)
            if len(tokens) != 4:
                raise StlParseError("vertex needs three coordinates", line=lineno)
            try:
                current.append([float(tok) for tok in tokens[1:4]])
            except ValueError:
                raise StlParseError("unparseable vertex coordinate", line=lineno) from None
        elif key == "endloop":
            if current is None:
                raise StlParseError("'endloop' outside a facet", line=lineno)
        elif key == "endfacet":
            if current is None or len(current) != 3:
                raise StlParseError(
                    "facet closed without exactly three vertices", line=lineno
                )
            triangles.append(current)
            current = None
        else:
            raise StlParseError(f"unexpected STL keyword {tokens[0]!r}", line=lineno)
    if current is not None:
        raise StlParseError("unterminated facet at end of file")
    if not triangles:
        raise StlParseError("ASCII STL contains no facets")
    soup = np.asarray(triangles, dtype=np.float64)
    soup, dropped = _drop_degenerate(soup)
    if soup.shape[0] == 0:
        raise StlParseError("ASCII STL contains only degenerate triangles")
    return _soup_to_mesh(soup, dropped)


def parse_stl_file(path):
    with open(path, "rb") as fh:
        return parse_stl(fh.read())


def write_stl_binary(mesh):
    """Serialize to binary STL bytes (geometry stored as float32)."""
    soup = mesh.triangle_soup().astype(np.float32)
    normals = mesh.normals.astype(np.float32)
    count = soup.shape[0]
    out = bytearray()
    out += b"tlsph binary stl".ljust(_BINARY_HEADER, b" ")
    out += struct.pack("<I", count)
    for k in range(count):
        out += normals[k].tobytes()
        out += soup[k].tobytes()
        out += struct.pack("<H", 0)
    return bytes(out)


def write_stl_ascii(mesh, name="tlsph"):
    lines = [f"solid {name}"]
    soup = mesh.triangle_soup()
    for k in range(soup.shape[0]):
        n = mesh.normals[k]
        lines.append(f"  facet normal {n[0]:.9e} {n[1]:.9e} {n[2]:.9e}")
        lines.append("    outer loop")
        for v in soup[k]:
            lines.append(f"      vertex {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    return "\n".join(lines) + "\n"


def write_stl_file(mesh, path, binary=True):
    if binary:
        with open(path, "wb") as fh:
            fh.write(write_stl_binary(mesh))
    else:
        with open(path, "w") as fh:
            fh.write(write_stl_ascii(mesh))


# ---------------------------------------------------------------------------
# primitive meshes (test fixtures and the bundled stent stand-in)
# ---------------------------------------------------------------------------

def box_mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)):
    """Axis-aligned box as 12 triangles."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    v = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
    ])
    t = np.array([
        [0, 2, 1], [0, 3, 2],          # bottom
        [4, 5, 6], [4, 6, 7],          # top
        [0, 1, 5], [0, 5, 4],          # y = y0
        [2, 3, 7], [2, 7, 6],          # y = y1
        [1, 2, 6], [1, 6, 5],          # x = x1
        [3, 0, 4], [3, 4, 7],          # x = x0
    ], dtype=np.int64)
    return TriangleMesh(vertices=v, triangles=t)


def sphere_mesh(radius=1.0, center=(0.0, 0.0, 0.0), n_lat=24, n_lon=48):
    """Watertight UV sphere."""
    center = np.asarray(center, dtype=np.float64)
    verts = [center + [0.0, 0.0, radius]]
    for i in range(1, n_lat):
        theta = np.pi * i / n_lat
        for j in range(n_lon):
            phi = 2.0 * np.pi * j / n_lon
            verts.append(center + radius * np.array([
                np.sin(theta) * np.cos(phi),
                np.sin(theta) * np.sin(phi),
                np.cos(theta),
            ]))
    verts.append(center + [0.0, 0.0, -radius])
    verts = np.asarray(verts)

    def ring(i, j):
        return 1 + (i - 1) * n_lon + (j % n_lon)

    tris = []
    for j in range(n_lon):
        tris.append([0, ring(1, j), ring(1, j + 1)])
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append([a, c, d])
            tris.append([a, d, b])
    south = len(verts) - 1
    for j in range(n_lon):
        tris.append([south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)])
    return TriangleMesh(vertices=verts, triangles=np.asarray(tris, dtype=np.int64))


def tube_mesh(outer_radius=0.4, inner_radius=0.3, length=1.0, segments=48,
              center=(0.0, 0.0, 0.0)):
    """Watertight hollow cylinder along z; the bundled stent stand-in."""
    if not 0.0 < inner_radius < outer_radius:
        raise ValueError("need 0 < inner_radius < outer_radius")
    center = np.asarray(center, dtype=np.float64)
    z0, z1 = -0.5 * length, 0.5 * length
    ang = 2.0 * np.pi * np.arange(segments) / segments
    unit = np.column_stack([np.cos(ang), np.sin(ang), np.zeros(segments)])
    rings = []
    for radius, z in ((outer_radius, z0), (outer_radius, z1),
                      (inner_radius, z0), (inner_radius, z1)):
        rings.append(center + radius * unit + [0.0, 0.0, z])
    verts = np.vstack(rings)
    ob, ot, ib, it_ = 0, segments, 2 * segments, 3 * segments

    tris = []
    for j in range(segments):
        k = (j + 1) % segments
        tris += [[ob + j, ob + k, ot + k], [ob + j, ot + k, ot + j]]   # outer wall
        tris += [[ib + j, it_ + k, ib + k], [ib + j, it_ + j, it_ + k]]  # inner wall
        tris += [[ot + j, ot + k, it_ + k], [ot + j, it_ + k, it_ + j]]  # top ring
        tris += [[ob + j, ib + k, ob + k], [ob + j, ib + j, ib + k]]     # bottom ring
    return TriangleMesh(vertices=verts, triangles=np.asarray(tris, dtype=np.int64))


# ---------------------------------------------------------------------------
# ray-parity lattice fill
# ---------------------------------------------------------------------------

_AXIS_PERM = {2: (0, 1, 2), 0: (1, 2, 0), 1: (2, 0, 1)}


def _ray_parity(points, soup, axis, jitter_scale, ops, rng, max_retries=6):
    """Crossing parity of +axis rays, retrying grazing hits with jitter."""
    perm = _AXIS_PERM[axis]
    tris = np.ascontiguousarray(soup[:, :, perm])
    pts = np.ascontiguousarray(points[:, perm])
    tri_min = tris.min(axis=1)
    tri_max = tris.max(axis=1)
    scale = float(np.linalg.norm(tri_max.max(axis=0) - tri_min.min(axis=0)))
    eps_det = 1e-12 * max(scale * scale, 1e-300)
    eps_len = 1e-9 * max(scale, 1e-300)
    counts, suspicious = ops.ray_crossings_z(
        pts, tris, tri_min, tri_max, eps_det, 1e-9, eps_len
    )
    parity = (counts & 1).astype(bool)
    bad = np.flatnonzero(suspicious)
    for _ in range(max_retries):
        if bad.size == 0:
            break
        # transverse jitter moves the ray off edges/planes without crossing
        # the surface for points a few jitter lengths away from it
        shift = rng.uniform(-1.0, 1.0, size=(bad.size, 3)) * jitter_scale
        shift[:, 2] = 0.0
        c2, s2 = ops.ray_crossings_z(
            np.ascontiguousarray(pts[bad] + shift), tris, tri_min, tri_max,
            eps_det, 1e-9, eps_len,
        )
        parity[bad] = (c2 & 1).astype(bool)
        bad = bad[s2.astype(bool)]
    return parity, bad


def _run_lengths(filled):
    """Per-cell length of the maximal filled run along each grid axis."""
    out = np.full(filled.shape + (3,), 0, dtype=np.int32)
    for axis in range(3):
        moved = np.moveaxis(filled, axis, 0)
        res = np.zeros(moved.shape, dtype=np.int32)
        run = np.zeros(moved.shape[1:], dtype=np.int32)
        for k in range(moved.shape[0]):
            run = np.where(moved[k], run + 1, 0)
            res[k] = run
        for k in range(moved.shape[0] - 2, -1, -1):
            res[k] = np.where(moved[k] & moved[k + 1], res[k + 1], res[k])
        np.moveaxis(out, -1, 0)[axis] = np.moveaxis(res, 0, axis)
    return out


def fill_mesh_with_lattice(mesh, dp, ops=None, rng_seed=20240317):
    """Sample the interior of a closed mesh on a cell-centered lattice.

    Membership is the crossing parity of a +z ray.  Parity along +x and +y
    is also computed for every candidate; if more than 1% of candidates
    disagree, the surface is not watertight and the fill aborts advising
    mesh repair.  Warns when the thinnest resolved feature spans fewer than
    3 particles.
    """
    if dp <= 0.0:
        raise ValueError(f"particle spacing must be positive, got dp = {dp}")
    ops = ops if ops is not None else backend.get_ops()
    rng = np.random.default_rng(rng_seed)
    lo, hi = mesh.bounds()
    extents = hi - lo
    if np.any(extents <= 0.0):
        raise ValueError("mesh bounding box is degenerate")
    counts = [max(1, _axis_count(extents[k], dp)) for k in range(3)]
    axes = [lo[k] + (np.arange(counts[k]) + 0.5) * dp for k in range(3)]
    xx, yy, zz = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    soup = np.ascontiguousarray(mesh.triangle_soup())
    jitter = 1e-6 * float(np.linalg.norm(extents))
    parities = []
    for axis in (2, 0, 1):
        parity, _ = _ray_parity(points, soup, axis, jitter, ops, rng)
        parities.append(parity)
    pz, px, py = parities

    inconsistent = (pz != px) | (pz != py)
    frac = float(inconsistent.mean()) if len(points) else 0.0
    if frac > 0.01:
        raise WatertightnessError(
            f"ray parity disagrees along independent directions for "
            f"{100.0 * frac:.1f}% of lattice points; the mesh does not bound "
            f"a volume - repair it (fill holes, fix normals) and retry"
        )

    keep = pz
    filled = keep.reshape(counts)
    if keep.any():
        runs = _run_lengths(filled)
        thickness = runs.min(axis=-1)[filled]
        thin_frac = float((thickness < 3).mean())
        if thin_frac > 0.5:
            warnings.warn(
                "most filled cells sit in features thinner than 3 particles; "
                "decrease dp to resolve the thinnest struts"
            )
    return points[keep]


# ---------------------------------------------------------------------------
# benchmark initial velocity fields
# ---------------------------------------------------------------------------

def initial_velocity_field(case, positions, omega0=None, v0=None, length=None):
    """Initial velocities for the built-in benchmark cases.

    cable:    axial v0 on the quarter of the rod farthest from the wall.
    bending:  uniform v0 along (sqrt(3)/2, 1/2, 0).
    twisting: v = w x r0 with w = (0, omega0 sin(pi y / (2 L)), 0).
    stl:      zero (band loading is applied as a prescribed velocity).
    """
    positions = np.asarray(positions, dtype=np.float64)
    v = np.zeros_like(positions)
    if case == "cable":
        speed = 5.0 if v0 is None else v0
        bar_length = 10.0 if length is None else length
        v[positions[:, 0] >= 0.75 * bar_length, 0] = speed
    elif case == "bending":
        speed = 10.0 if v0 is None else v0
        v[:, 0] = speed * (np.sqrt(3.0) / 2.0)
        v[:, 1] = speed * 0.5
    elif case == "twisting":
        if omega0 is None:
            raise ValueError("twisting case needs omega0")
        col_length = 6.0 if length is None else length
        wy = omega0 * np.sin(np.pi * positions[:, 1] / (2.0 * col_length))
        # v = (0, wy, 0) x r0
        v[:, 0] = wy * positions[:, 2]
        v[:, 2] = -wy * positions[:, 0]
    elif case == "stl":
        pass
    else:
        raise ValueError(f"unknown case id {case!r}")
    return v
