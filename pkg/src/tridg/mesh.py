"""Conforming triangular meshes: loading, generation, refinement, geometry.

Conventions
-----------
* Cells are vertex index triples, counterclockwise.
* Local edge i (0-based) is opposite local vertex i and connects local
  vertices (i+1)%3 -> (i+2)%3 in CCW traversal order.
* Each unique edge is stored once. Its endpoint order is the traversal order
  of its *left* cell; the right cell (if any) traverses it reversed.
* Periodic boundary pairs are glued into a single interior-like edge record
  carrying the translation offset from the left to the right side.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, MeshFormatError, TopologyError

BOUNDARY_TAGS = ("IN", "OUT", "WALL", "EXACT")


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]

DEGENERACY_REL_TOL = 1e-14
PERIODIC_REL_TOL = 1e-12


@dataclass
class Mesh:
    """Immutable triangulation with precomputed geometry and connectivity."""

    vertices: np.ndarray        # (nv, 2)
    cells: np.ndarray           # (nc, 3) CCW
    # one record per unique edge (periodic pairs glued)
    edge_vertices: np.ndarray   # (ne, 2) endpoints, left-cell traversal order
    edge_cells: np.ndarray      # (ne, 2) [left, right]; right = -1 on boundary
    edge_local: np.ndarray      # (ne, 2) local edge index within left/right cell
    edge_tag: list              # boundary tag str or None (periodic/interior)
    edge_offset: np.ndarray     # (ne, 2) translation left->right side (periodic)
    edge_periodic: np.ndarray   # (ne,) bool
    # geometry
    area: np.ndarray = field(default=None)        # (nc,)
    edge_len: np.ndarray = field(default=None)    # (nc, 3)
    normal: np.ndarray = field(default=None)      # (nc, 3, 2) outward unit
    height: np.ndarray = field(default=None)      # (nc, 3)
    jac: np.ndarray = field(default=None)         # (nc, 2, 2)
    jac_inv: np.ndarray = field(default=None)     # (nc, 2, 2)
    sort_order: np.ndarray = field(default=None)  # (nc, 3) local edges, len desc
    centroid: np.ndarray = field(default=None)    # (nc, 2)
    cell_edges: np.ndarray = field(default=None)  # (nc, 3) global edge id
    cell_edge_forward: np.ndarray = field(default=None)  # (nc, 3) bool

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edge_vertices)

    @property
    def boundary_edge_ids(self):
        return np.nonzero(self.edge_cells[:, 1] < 0)[0]

    @property
    def interior_edge_ids(self):
        return np.nonzero(self.edge_cells[:, 1] >= 0)[0]

    def cell_vertices(self, c):
        return self.vertices[self.cells[c]]

    def physical_to_reference(self, c, xy):
        """Map physical points (..., 2) in cell c to reference coordinates."""
        v0 = self.vertices[self.cells[c, 0]]
        d = np.asarray(xy, dtype=float) - v0
        return d @ self.jac_inv[c].T

    def reference_to_physical(self, c, ref):
        v0 = self.vertices[self.cells[c, 0]]
        return v0 + np.asarray(ref, dtype=float) @ self.jac[c].T


def _compute_geometry(mesh):
    v = mesh.vertices[mesh.cells]                       # (nc, 3, 2)
    e = v[:, [2, 0, 1]] - v[:, [1, 2, 0]]               # edge i: v[i+1] -> v[i+2]
    area2 = _cross2(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    mesh.area = 0.5 * area2
    mesh.edge_len = np.linalg.norm(e, axis=2)
    mesh.normal = np.stack([e[..., 1], -e[..., 0]], axis=-1) / mesh.edge_len[..., None]
    # distance from the opposite vertex to each edge line
    to_vert = v - v[:, [1, 2, 0]]                       # v[i] - edge start
    mesh.height = np.abs(_cross2(e, to_vert)) / mesh.edge_len
    mesh.jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
    det = area2
    inv = np.empty_like(mesh.jac)
    inv[:, 0, 0] = mesh.jac[:, 1, 1]
    inv[:, 0, 1] = -mesh.jac[:, 0, 1]
    inv[:, 1, 0] = -mesh.jac[:, 1, 0]
    inv[:, 1, 1] = mesh.jac[:, 0, 0]
    mesh.jac_inv = inv / det[:, None, None]
    mesh.sort_order = np.argsort(-mesh.edge_len, axis=1, kind="stable")
    mesh.centroid = v.mean(axis=1)


def _validate_cells(vertices, cells):
    if cells.min(initial=0) < 0 or cells.max(initial=-1) >= len(vertices):
        raise TopologyError("cell vertex index out of range")
    triples = [tuple(sorted(c)) for c in cells]
    if len(set(triples)) != len(triples):
        raise TopologyError("duplicate cell (same vertex triple appears twice)")
    v = vertices[cells]
    area2 = _cross2(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    if np.any(area2 <= 0):
        bad = int(np.argmax(area2 <= 0))
        raise GeometryError(
            f"cell {bad} has non-positive area (vertices must be CCW)")
    bbox = np.ptp(vertices, axis=0)
    bbox_area = max(bbox[0] * bbox[1], bbox.max() ** 2)
    if np.any(0.5 * area2 < DEGENERACY_REL_TOL * bbox_area):
        bad = int(np.argmax(0.5 * area2 < DEGENERACY_REL_TOL * bbox_area))
        raise GeometryError(f"cell {bad} is degenerate (area below tolerance)")


def build_mesh(vertices, cells, boundary_tags=None):
    """Assemble a Mesh from raw arrays.

    boundary_tags: iterable of (iv0, iv1, tag). Tags are 'IN', 'OUT', 'WALL',
    'EXACT', or 'P<k>' where the pair id <k> appears on exactly two edges.
    Every boundary edge must be tagged.
    """
    vertices = np.asarray(vertices, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    _validate_cells(vertices, cells)
    nc = len(cells)

    # unique-edge map: sorted vertex pair -> list of (cell, local_edge, a, b)
    pair_map = {}
    for c in range(nc):
        for i in range(3):
            a = int(cells[c, (i + 1) % 3])
            b = int(cells[c, (i + 2) % 3])
            pair_map.setdefault((min(a, b), max(a, b)), []).append((c, i, a, b))

    for pair, users in pair_map.items():
        if len(users) > 2:
            raise TopologyError(f"edge {pair} shared by {len(users)} cells")
        if len(users) == 2 and users[0][2:] == users[1][2:]:
            raise TopologyError(f"edge {pair} traversed twice in the same direction")

    tag_of = {}
    if boundary_tags is not None:
        for iv0, iv1, tag in boundary_tags:
            key = (min(int(iv0), int(iv1)), max(int(iv0), int(iv1)))
            if key in tag_of:
                raise TopologyError(f"boundary edge {key} tagged twice")
            tag_of[key] = str(tag)

    ev, ec, el, tags = [], [], [], []
    eid_of_pair = {}
    boundary_pairs = []
    for pair, users in sorted(pair_map.items()):
        c0, i0, a0, b0 = users[0]
        eid = len(ev)
        eid_of_pair[pair] = eid
        ev.append((a0, b0))
        el.append([i0, -1])
        if len(users) == 2:
            c1, i1, _, _ = users[1]
            ec.append([c0, c1])
            el[-1][1] = i1
            tags.append(None)
        else:
            ec.append([c0, -1])
            tags.append(tag_of.get(pair))
            if tags[-1] is None:
                raise TopologyError(f"boundary edge {pair} has no tag")
            boundary_pairs.append(pair)
        if pair in tag_of and len(users) == 2:
            raise TopologyError(f"interior edge {pair} carries a boundary tag")

    extra = set(tag_of) - set(boundary_pairs)
    if extra:
        raise TopologyError(f"tag references non-boundary edge {sorted(extra)[0]}")

    ev = np.array(ev, dtype=np.int64)
    ec = np.array(ec, dtype=np.int64)
    el = np.array(el, dtype=np.int64)
    offset = np.zeros((len(ev), 2))
    periodic = np.zeros(len(ev), dtype=bool)

    mesh = Mesh(vertices, cells, ev, ec, el, tags, offset, periodic)
    _compute_geometry(mesh)
    _glue_periodic(mesh)
    _build_cell_edge_tables(mesh)
    return mesh


def _glue_periodic(mesh):
    groups = {}
    for eid, tag in enumerate(mesh.edge_tag):
        if tag is not None and tag.startswith("P"):
            groups.setdefault(tag, []).append(eid)
    if not groups:
        return
    scale = max(np.ptp(mesh.vertices, axis=0).max(), 1.0)
    keep = np.ones(mesh.n_edges, dtype=bool)
    for tag, eids in sorted(groups.items()):
        if len(eids) != 2:
            raise TopologyError(f"periodic pair id {tag} used by {len(eids)} edges")
        ea, eb = eids
        pa = mesh.vertices[mesh.edge_vertices[ea]]
        pb = mesh.vertices[mesh.edge_vertices[eb]]
        la, lb = np.linalg.norm(pa[1] - pa[0]), np.linalg.norm(pb[1] - pb[0])
        if abs(la - lb) > PERIODIC_REL_TOL * max(la, lb):
            raise TopologyError(f"periodic pair {tag} has mismatched edge lengths")
        t = pb.mean(axis=0) - pa.mean(axis=0)
        # match endpoints under translation; conforming pairs traverse reversed
        if np.allclose(pa + t, pb[::-1], atol=PERIODIC_REL_TOL * scale):
            reversed_match = True
        elif np.allclose(pa + t, pb, atol=PERIODIC_REL_TOL * scale):
            reversed_match = False
        else:
            raise TopologyError(f"periodic pair {tag} endpoints do not match under translation")
        if not reversed_match:
            raise TopologyError(
                f"periodic pair {tag} traverses the same direction on both sides")
        mesh.edge_cells[ea, 1] = mesh.edge_cells[eb, 0]
        mesh.edge_local[ea, 1] = mesh.edge_local[eb, 0]
        mesh.edge_offset[ea] = t
        mesh.edge_periodic[ea] = True
        mesh.edge_tag[ea] = None
        keep[eb] = False
    idx = np.nonzero(keep)[0]
    mesh.edge_vertices = mesh.edge_vertices[idx]
    mesh.edge_cells = mesh.edge_cells[idx]
    mesh.edge_local = mesh.edge_local[idx]
    mesh.edge_offset = mesh.edge_offset[idx]
    mesh.edge_periodic = mesh.edge_periodic[idx]
    mesh.edge_tag = [mesh.edge_tag[i] for i in idx]


def _build_cell_edge_tables(mesh):
    nc = mesh.n_cells
    mesh.cell_edges = np.full((nc, 3), -1, dtype=np.int64)
    mesh.cell_edge_forward = np.zeros((nc, 3), dtype=bool)
    for eid in range(mesh.n_edges):
        cl, cr = mesh.edge_cells[eid]
        il, ir = mesh.edge_local[eid]
        mesh.cell_edges[cl, il] = eid
        mesh.cell_edge_forward[cl, il] = True
        if cr >= 0:
            mesh.cell_edges[cr, ir] = eid
            mesh.cell_edge_forward[cr, ir] = False
    if np.any(mesh.cell_edges < 0):
        raise TopologyError("internal error: cell edge table incomplete")


# ---------------------------------------------------------------------------
# mesh file format
# ---------------------------------------------------------------------------

def load_mesh(source):
    """Read the plain-text mesh format.

    Line 1: `NV NC NBE`; NV lines `x y`; NC lines `i0 i1 i2` (0-based, CCW);
    NBE lines `iv0 iv1 TAG` with TAG in {P<k>, IN, OUT, WALL, EXACT}.
    `#` starts a comment.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source) as f:
            lines = f.read().splitlines()

    tokens = []  # (line_number, fields)
    for n, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            tokens.append((n, text.split()))

    if not tokens:
        raise MeshFormatError("empty mesh file")

    def parse(fields, line, types, what):
        if len(fields) != len(types):
            raise MeshFormatError(f"expected {what}", line=line)
        out = []
        for f, t in zip(fields, types):
            try:
                out.append(t(f))
            except ValueError:
                raise MeshFormatError(f"expected {what}", line=line) from None
        return out

    n0, f0 = tokens[0]
    nv, nc, nbe = parse(f0, n0, (int, int, int), "header `NV NC NBE`")
    if len(tokens) != 1 + nv + nc + nbe:
        raise MeshFormatError(
            f"expected {1 + nv + nc + nbe} data lines, found {len(tokens)}",
            line=tokens[-1][0])

    verts = np.empty((nv, 2))
    for i in range(nv):
        n, f = tokens[1 + i]
        verts[i] = parse(f, n, (float, float), "vertex `x y`")
    cells = np.empty((nc, 3), dtype=np.int64)
    for i in range(nc):
        n, f = tokens[1 + nv + i]
        cells[i] = parse(f, n, (int, int, int), "cell `i0 i1 i2`")
        if cells[i].min() < 0 or cells[i].max() >= nv:
            raise MeshFormatError("cell vertex index out of range", line=n)
    btags = []
    for i in range(nbe):
        n, f = tokens[1 + nv + nc + i]
        iv0, iv1, tag = parse(f, n, (int, int, str), "boundary edge `iv0 iv1 TAG`")
        if not (0 <= iv0 < nv and 0 <= iv1 < nv):
            raise MeshFormatError("boundary vertex index out of range", line=n)
        if tag not in BOUNDARY_TAGS and not (
                tag.startswith("P") and tag[1:].isdigit()):
            raise MeshFormatError(f"unknown boundary tag {tag!r}", line=n)
        btags.append((iv0, iv1, tag))
    return build_mesh(verts, cells, btags)


def save_mesh(mesh, path):
    """Write the mesh in the plain-text format (periodic pairs re-expanded)."""
    btags = _boundary_tag_records(mesh)
    with open(path, "w") as f:
        f.write(f"{mesh.n_vertices} {mesh.n_cells} {len(btags)}\n")
        for x, y in mesh.vertices:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        for c in mesh.cells:
            f.write(f"{c[0]} {c[1]} {c[2]}\n")
        for a, b, t in btags:
            f.write(f"{a} {b} {t}\n")


# ---------------------------------------------------------------------------
# generation / refinement
# ---------------------------------------------------------------------------

def generate_structured(bounds, nx, ny, diagonal="alternating",
                        periodic=(), tags=None):
    """Structured triangulation of a rectangle: 2*nx*ny cells.

    bounds: (x0, y0, x1, y1). diagonal: 'alternating' flips the split
    checkerboard-fashion; 'uniform' always uses the same diagonal.
    periodic: subset of {'x', 'y'} to glue opposite sides.
    tags: {'left','right','bottom','top'} -> tag for non-periodic sides
          (default 'OUT').
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx, ny must be >= 1")
    if diagonal not in ("alternating", "uniform"):
        raise ValueError("diagonal must be 'alternating' or 'uniform'")
    x0, y0, x1, y1 = bounds
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    vid = lambda i, j: j * (nx + 1) + i
    verts = np.array([[xs[i], ys[j]] for j in range(ny + 1) for i in range(nx + 1)])

    cells = []
    for j in range(ny):
        for i in range(nx):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            flip = diagonal == "alternating" and (i + j) % 2 == 1
            if not flip:   # diagonal a-c
                cells.append((a, b, c))
                cells.append((a, c, d))
            else:          # diagonal b-d
                cells.append((a, b, d))
                cells.append((b, c, d))
    cells = np.array(cells, dtype=np.int64)

    tags = dict(tags or {})
    side_tag = {s: tags.get(s, "OUT") for s in ("left", "right", "bottom", "top")}
    btags = []
    pid = 0
    for j in range(ny):  # left/right sides
        lpair = (vid(0, j), vid(0, j + 1))
        rpair = (vid(nx, j), vid(nx, j + 1))
        if "x" in periodic:
            btags.append((*lpair, f"P{pid}"))
            btags.append((*rpair, f"P{pid}"))
            pid += 1
        else:
            btags.append((*lpair, side_tag["left"]))
            btags.append((*rpair, side_tag["right"]))
    for i in range(nx):  # bottom/top sides
        bpair = (vid(i, 0), vid(i + 1, 0))
        tpair = (vid(i, ny), vid(i + 1, ny))
        if "y" in periodic:
            btags.append((*bpair, f"P{pid}"))
            btags.append((*tpair, f"P{pid}"))
            pid += 1
        else:
            btags.append((*bpair, side_tag["bottom"]))
            btags.append((*tpair, side_tag["top"]))
    return build_mesh(verts, cells, btags)


def _boundary_tag_records(mesh):
    """Recover (iv0, iv1, tag) records, re-expanding periodic pairs."""
    records = []
    pid = 0
    for eid in range(mesh.n_edges):
        a, b = mesh.edge_vertices[eid]
        if mesh.edge_periodic[eid]:
            cr, ir = mesh.edge_cells[eid, 1], mesh.edge_local[eid, 1]
            ra = int(mesh.cells[cr, (ir + 1) % 3])
            rb = int(mesh.cells[cr, (ir + 2) % 3])
            records.append((int(a), int(b), f"P{pid}"))
            records.append((ra, rb, f"P{pid}"))
            pid += 1
        elif mesh.edge_tag[eid] is not None:
            records.append((int(a), int(b), mesh.edge_tag[eid]))
    return records


def refine_uniform(mesh):
    """Split every cell into four similar children via edge midpoints."""
    verts = list(map(tuple, mesh.vertices))
    mid_index = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in mid_index:
            mid_index[key] = len(verts)
            verts.append(tuple(0.5 * (mesh.vertices[a] + mesh.vertices[b])))
        return mid_index[key]

    cells = []
    for (a, b, c) in mesh.cells:
        mab, mbc, mca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        cells.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])

    # child boundary edges: split each tagged parent edge at its midpoint
    btags = []
    pid = 0
    parent_records = _boundary_tag_records(mesh)
    periodic_children = {}
    for iv0, iv1, tag in parent_records:
        m = midpoint(iv0, iv1)
        halves = [(iv0, m), (m, iv1)]
        if tag.startswith("P"):
            periodic_children.setdefault(tag, []).append(halves)
        else:
            btags.extend([(h[0], h[1], tag) for h in halves])
    varr = np.array(verts)
    for tag, sides in sorted(periodic_children.items()):
        ha, hb = sides  # halves of the two parent edges of this pair
        # translation of the parent pair, from parent endpoints
        t_parent = (varr[list(hb[0] + hb[1])].mean(axis=0)
                    - varr[list(ha[0] + ha[1])].mean(axis=0))
        scale = max(np.ptp(varr, axis=0).max(), 1.0)
        remaining = list(hb)
        for half_a in ha:
            ma = varr[list(half_a)].mean(axis=0)
            matched = None
            for half_b in remaining:
                mb = varr[list(half_b)].mean(axis=0)
                if np.allclose(ma + t_parent, mb, atol=1e-9 * scale):
                    matched = half_b
                    break
            if matched is None:
                raise TopologyError(f"cannot re-pair refined periodic edges of {tag}")
            btags.append((half_a[0], half_a[1], f"P{pid}"))
            btags.append((matched[0], matched[1], f"P{pid}"))
            pid += 1
            remaining.remove(matched)
    return build_mesh(varr, np.array(cells, dtype=np.int64), btags)


def perturb(mesh, amplitude=0.2, seed=0):
    """Jitter interior vertices by `amplitude` times the local edge scale.

    Boundary vertices stay fixed so tags and periodic pairing remain valid.
    Produces an irregular conforming mesh for robustness tests.
    """
    rng = np.random.default_rng(seed)
    on_boundary = np.zeros(mesh.n_vertices, dtype=bool)
    for eid in range(mesh.n_edges):
        if mesh.edge_cells[eid, 1] < 0 or mesh.edge_periodic[eid]:
            on_boundary[mesh.edge_vertices[eid]] = True
            if mesh.edge_periodic[eid]:
                cr, ir = mesh.edge_cells[eid, 1], mesh.edge_local[eid, 1]
                on_boundary[mesh.cells[cr, (ir + 1) % 3]] = True
                on_boundary[mesh.cells[cr, (ir + 2) % 3]] = True
    # local scale: shortest incident edge per vertex
    scale = np.full(mesh.n_vertices, np.inf)
    for c in range(mesh.n_cells):
        for i in range(3):
            a = mesh.cells[c, (i + 1) % 3]
            b = mesh.cells[c, (i + 2) % 3]
            l = mesh.edge_len[c, i]
            scale[a] = min(scale[a], l)
            scale[b] = min(scale[b], l)
    verts = mesh.vertices.copy()
    free = ~on_boundary
    verts[free] += (rng.random((free.sum(), 2)) - 0.5) * (
        amplitude * scale[free, None])
    return build_mesh(verts, mesh.cells.copy(), _boundary_tag_records(mesh))
