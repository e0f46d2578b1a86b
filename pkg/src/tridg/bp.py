"""Bound preservation: convex decompositions, BP CFL numbers, and the limiter.

A convex decomposition rewrites the cell average as a positive combination of
edge-Gauss line averages and internal point values; its edge weights determine
the largest provably bound-preserving CFL number C_BP = min_i w_i / l^(i).
Edge lengths are always taken in the sorted order l1 >= l2 >= l3, with the
vertex v^(i) opposite edge i carried along.
"""

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from . import quadrature
from .errors import AdmissibilityError, ConfigError

SCHEMES = ("dcw", "zxs")
NODE_MERGE_TOL = 1e-12

_S3 = sqrt(3.0)

# c_{s,i} coefficient rows (s=1,2; i=1..3) as combinations of (l1, l2, l3):
# value = row0 @ l + sqrt(3) * row1 @ l
_C_COEF = np.array([
    [[3, 3, 0], [0, 1, -1]],
    [[0, 6, 0], [-1, 0, 1]],
    [[0, 3, 3], [1, -1, 0]],
    [[3, 3, 0], [0, -1, 1]],
    [[0, 6, 0], [1, 0, -1]],
    [[0, 3, 3], [-1, 1, 0]],
], dtype=float).reshape(2, 3, 2, 3)

_M = np.array([
    # M_{1,1}, M_{1,2}, M_{1,3}
    [[[6, 1, -2], [1, 2 * _S3 + 6, -_S3 - 2], [-2, -_S3 - 2, 6]],
     [[6, -_S3 - 2, -2], [-_S3 - 2, 12, _S3 - 2], [-2, _S3 - 2, 6]],
     [[6, _S3 - 2, -2], [_S3 - 2, 6 - 2 * _S3, 1], [-2, 1, 6]]],
    # M_{2,1}, M_{2,2}, M_{2,3}
    [[[6, 1, -2], [1, 6 - 2 * _S3, _S3 - 2], [-2, _S3 - 2, 6]],
     [[6, _S3 - 2, -2], [_S3 - 2, 12, -_S3 - 2], [-2, -_S3 - 2, 6]],
     [[6, -_S3 - 2, -2], [-_S3 - 2, 2 * _S3 + 6, 1], [-2, 1, 6]]],
])  # (2, 3, 3, 3)


def p2_shape_length(l):
    """Root-mean-square edge combination entering the P2 weights.

    l: (..., 3) sorted edge lengths. Equals the common edge length on
    equilateral cells.
    """
    l = np.asarray(l, dtype=float)
    sq = (l ** 2).sum(axis=-1)
    cross = l[..., 0] * l[..., 1] + l[..., 1] * l[..., 2] + l[..., 2] * l[..., 0]
    return np.sqrt(sq - (2.0 / 3.0) * cross)


def optimal_p1_weights(l):
    """Edge weights, internal-node weight and barycentric coordinates, P1.

    l: (..., 3) sorted descending. Returns (w (...,3), omega (...,),
    bary (...,3)) where bary is w.r.t. the sorted vertices (v_i opposite edge
    i); the third barycentric coordinate is identically zero, i.e. the node
    lies on the shortest edge. omega == 0 on equilateral cells (no node).
    """
    l = np.asarray(l, dtype=float)
    s12 = l[..., 0] + l[..., 1]
    w = 2.0 * l / (3.0 * s12[..., None])
    num = s12 - 2.0 * l[..., 2]
    omega = num / (3.0 * s12)
    safe = np.where(num > 0, num, 1.0)
    bary = np.zeros(l.shape)
    bary[..., 0] = np.where(num > 0, (l[..., 0] - l[..., 2]) / safe, 0.0)
    bary[..., 1] = np.where(num > 0, (l[..., 1] - l[..., 2]) / safe, 0.0)
    return w, omega, bary


def optimal_p2_weights(l):
    """Edge weights and the two internal nodes, P2.

    Returns (w (...,3), omega (...,) weight of each node, bary (...,2,3)).
    """
    l = np.asarray(l, dtype=float)
    lbar = l.mean(axis=-1)
    lhat = p2_shape_length(l)
    w = 2.0 * l / (9.0 * lbar + 3.0 * lhat)[..., None]
    omega = (lbar + lhat) / (6.0 * lbar + 2.0 * lhat)
    quad = np.einsum("...i,srij,...j->...sr", l, _M, l)     # (...,2,3)
    cpart = (np.einsum("srkj,...j->...srk", _C_COEF, l))
    c = cpart[..., 0] + _S3 * cpart[..., 1]                  # (...,2,3)
    denom = 18.0 * (lbar + lhat) * (l[..., 1] + lhat)
    bary = (quad + 2.0 * c * lhat[..., None, None]) / denom[..., None, None]
    return w, omega, bary


def optimal_cfl(l, k):
    """C_BP of the optimal decomposition: min_i w_i / l^(i)."""
    l = np.asarray(l, dtype=float)
    if k == 1:
        return 2.0 / (3.0 * (l[..., 0] + l[..., 1]))
    if k == 2:
        return 2.0 / (9.0 * l.mean(axis=-1) + 3.0 * p2_shape_length(l))
    raise ConfigError(f"optimal decomposition is defined for k in (1, 2), got {k}")


def classical_cfl(l, k):
    """BP CFL number of the classical decomposition: 1/(9 lbar), 1/(27 lbar)."""
    lbar = np.asarray(l, dtype=float).mean(axis=-1)
    if k == 1:
        return 1.0 / (9.0 * lbar)
    if k == 2:
        return 1.0 / (27.0 * lbar)
    raise ConfigError(f"classical CFL is defined for k in (1, 2), got {k}")


def chen_shu_cfl(l, k):
    """Comparison CFL number 1/(6 l^(1)) (same for k = 1, 2)."""
    if k not in (1, 2):
        raise ConfigError(f"Chen-Shu CFL is defined for k in (1, 2), got {k}")
    return 1.0 / (6.0 * np.asarray(l, dtype=float)[..., 0])


def cfl_number(l, k, scheme):
    if scheme == "dcw":
        return optimal_cfl(l, k)
    if scheme == "zxs":
        return classical_cfl(l, k)
    if scheme == "cs":
        return chen_shu_cfl(l, k)
    raise ConfigError(f"unknown decomposition scheme {scheme!r}")


# ---------------------------------------------------------------------------
# single-cell decomposition object (CLI / inspection / feasibility tests)
# ---------------------------------------------------------------------------

@dataclass
class ConvexDecomposition:
    """Decomposition of one triangular cell's average.

    Edge weights are indexed in the sorted-edge order. `nodes` holds
    (barycentric coordinates w.r.t. sorted vertices, weight) pairs after
    merging coincident nodes; `raw_nodes` keeps the unmerged ones for
    inspection.
    """

    scheme: str
    k: int
    lengths: np.ndarray            # sorted descending
    vertices: np.ndarray           # (3, 2), vertex i opposite sorted edge i
    edge_weights: np.ndarray       # (3,)
    nodes: list                    # [(bary (3,), weight)]
    cfl: float
    zero_internal_mass: bool
    raw_nodes: list = field(default_factory=list)

    def node_points(self):
        return np.array([b @ self.vertices for b, _ in self.nodes]).reshape(-1, 2)


def sorted_cell(vertices):
    """Sort a single triangle: returns (lengths desc, vertices opposite them)."""
    v = np.asarray(vertices, dtype=float)
    lens = np.array([np.linalg.norm(v[(i + 2) % 3] - v[(i + 1) % 3])
                     for i in range(3)])
    order = np.argsort(-lens, kind="stable")
    return lens[order], v[order]


def decomposition(vertices, k, scheme="dcw"):
    """Build the ConvexDecomposition of one triangle given by its vertices."""
    if scheme != "dcw":
        raise ConfigError(
            "explicit internal nodes are only constructed for the optimal "
            "decomposition; classical/Chen-Shu enter through their CFL numbers")
    l, v = sorted_cell(vertices)
    if k == 1:
        w, omega, bary = optimal_p1_weights(l)
        raw = [(bary, float(omega))]
        # near-equilateral cells produce a node of vanishing weight; drop it
        nodes = [] if omega <= 1e-14 else [(bary, float(omega))]
        zero = omega <= 1e-14
    elif k == 2:
        w, omega, bary = optimal_p2_weights(l)
        raw = [(bary[0], float(omega)), (bary[1], float(omega))]
        scale = max(1.0, float(l[0]))
        if np.linalg.norm((bary[0] - bary[1]) @ v) <= NODE_MERGE_TOL * scale:
            nodes = [(0.5 * (bary[0] + bary[1]), 2.0 * float(omega))]
        else:
            nodes = [(bary[0], float(omega)), (bary[1], float(omega))]
        zero = False
    else:
        raise ConfigError(f"optimal decomposition is defined for k in (1, 2), got {k}")
    return ConvexDecomposition(
        scheme="dcw", k=k, lengths=l, vertices=v, edge_weights=w, nodes=nodes,
        cfl=float(optimal_cfl(l, k)), zero_internal_mass=bool(zero),
        raw_nodes=raw)


def decomposition_residual(dec, ab):
    """Decomposition error for the monomial x^a y^b (analytic oracle).

    Uses closed-form segment/triangle integrals of monomials of total degree
    <= 2, independent of any quadrature used elsewhere.
    """
    a, b = ab
    v = dec.vertices
    lhs = _triangle_monomial_mean(v, a, b)
    rhs = 0.0
    for i in range(3):
        va, vb = v[(i + 1) % 3], v[(i + 2) % 3]
        rhs += dec.edge_weights[i] * _segment_monomial_mean(va, vb, a, b)
    for bary, wt in dec.nodes:
        p = bary @ v
        rhs += wt * p[0] ** a * p[1] ** b
    return lhs - rhs


def _segment_monomial_mean(va, vb, a, b):
    # (1/l) * line integral of x^a y^b over [va, vb]; exact for a+b <= 2
    x0, y0 = va
    x1, y1 = vb
    if a + b == 0:
        return 1.0
    if (a, b) == (1, 0):
        return 0.5 * (x0 + x1)
    if (a, b) == (0, 1):
        return 0.5 * (y0 + y1)
    if (a, b) == (2, 0):
        return (x0 * x0 + x0 * x1 + x1 * x1) / 3.0
    if (a, b) == (0, 2):
        return (y0 * y0 + y0 * y1 + y1 * y1) / 3.0
    if (a, b) == (1, 1):
        return (2 * x0 * y0 + x0 * y1 + x1 * y0 + 2 * x1 * y1) / 6.0
    raise ValueError("oracle only covers total degree <= 2")


def _triangle_monomial_mean(v, a, b):
    # (1/|K|) * integral of x^a y^b; exact for a+b <= 2
    x, y = v[:, 0], v[:, 1]
    if a + b == 0:
        return 1.0
    if (a, b) == (1, 0):
        return x.mean()
    if (a, b) == (0, 1):
        return y.mean()
    if (a, b) == (2, 0):
        return ((x ** 2).sum() + x[0] * x[1] + x[1] * x[2] + x[2] * x[0]) / 6.0
    if (a, b) == (0, 2):
        return ((y ** 2).sum() + y[0] * y[1] + y[1] * y[2] + y[2] * y[0]) / 6.0
    if (a, b) == (1, 1):
        return ((2 * (x * y).sum() + x[0] * y[1] + x[1] * y[0] + x[1] * y[2]
                 + x[2] * y[1] + x[0] * y[2] + x[2] * y[0]) / 12.0)
    raise ValueError("oracle only covers total degree <= 2")


# ---------------------------------------------------------------------------
# time-step bounds
# ---------------------------------------------------------------------------

def bp_timestep(mesh, alpha, c_ssp, scheme, k):
    """dt = (C_SSP / alpha) * min_K C_K |K| for the chosen decomposition."""
    if mesh.n_cells == 0:
        raise ConfigError("empty mesh")
    if alpha <= 0:
        raise ConfigError("alpha must be positive")
    lsorted = np.take_along_axis(mesh.edge_len, mesh.sort_order, axis=1)
    c = cfl_number(lsorted, k, scheme)
    return c_ssp / alpha * float(np.min(c * mesh.area))


def generic_timestep(mesh, alpha, c_ssp, k):
    """Non-BP CFL bound dt = (C_SSP / alpha) * min_K |K| / ((2k+1) sum_i l_i)."""
    if mesh.n_cells == 0:
        raise ConfigError("empty mesh")
    if alpha <= 0:
        raise ConfigError("alpha must be positive")
    return c_ssp / alpha * float(
        np.min(mesh.area / ((2 * k + 1) * mesh.edge_len.sum(axis=1))))


# ---------------------------------------------------------------------------
# limiter
# ---------------------------------------------------------------------------

class BPLimiter:
    """Two-step scaling limiter enforcing admissibility at the check nodes.

    Check nodes: the edge Gauss points always; for k=1 with the optimal
    decomposition also the two vertices opposite the longest edges; for k=2
    the weighted internal remainder value. Scalar models enforce the maximum
    principle on a fixed interval `bounds`; Euler enforces positive density
    then positive internal energy. Cell averages are never modified.
    """

    EPS = 1e-13

    def __init__(self, op, scheme="dcw", bounds=None):
        if scheme not in SCHEMES:
            raise ConfigError(f"bp scheme {scheme!r} not in {SCHEMES}")
        if op.k not in (1, 2):
            raise ConfigError("the BP limiter supports k = 1 and 2 only")
        self.op = op
        self.scheme = scheme
        self.k = op.k
        mesh = op.mesh
        self.is_euler = op.model.name == "euler"
        if not self.is_euler:
            if bounds is None:
                raise ConfigError("scalar BP limiting needs bounds=(lo, hi)")
            self.bounds = (float(bounds[0]), float(bounds[1]))

        lsorted = np.take_along_axis(mesh.edge_len, mesh.sort_order, axis=1)
        if scheme == "dcw":
            if self.k == 1:
                w, _, _ = optimal_p1_weights(lsorted)
            else:
                w, _, _ = optimal_p2_weights(lsorted)
        else:
            # classical edge weights 2 w1_GL / 3 with L = ceil((k+3)/2)
            L = -(-(self.k + 3) // 2)
            w = np.full_like(lsorted, 2.0 / (3.0 * L * (L - 1)))
        # scatter sorted-order weights back to local edge order
        self.w_local = np.empty_like(w)
        np.put_along_axis(self.w_local, mesh.sort_order, w, axis=1)
        self.sum_w = self.w_local.sum(axis=1)
        self.use_star = self.k == 2              # remainder value check node
        self.use_vertices = self.k == 1 and scheme == "dcw"
        # local indices of the vertices opposite the two longest edges
        self.vert_ids = mesh.sort_order[:, :2]

        self.violations = 0                      # cells scaled so far

    # node-value helpers ----------------------------------------------------

    def _edge_gauss_values(self, coeffs):
        return self.op.traces(coeffs)            # (nc, 3, Q, d)

    def _star(self, values_edge, mean):
        """Decomposition remainder (mean - sum_i w_i avg_i) / (1 - sum w)."""
        avg = np.einsum("q,ciq->ci", self.op.edge_w, values_edge)
        num = mean - (self.w_local * avg).sum(axis=1)
        return num / (1.0 - self.sum_w)

    # main entry ------------------------------------------------------------

    def apply(self, state):
        if self.is_euler:
            return self._apply_euler(state)
        return self._apply_scalar(state)

    def _apply_scalar(self, state):
        lo, hi = self.bounds
        coeffs = state.coeffs.copy()
        mean = coeffs[:, 0, 0]
        if np.any(mean < lo - 1e-12) or np.any(mean > hi + 1e-12):
            bad = int(np.argmax((mean < lo - 1e-12) | (mean > hi + 1e-12)))
            raise AdmissibilityError(
                "cell average outside the invariant interval", cell=bad)
        tr = self._edge_gauss_values(coeffs)[..., 0]
        vals = [tr.reshape(len(mean), -1)]
        if self.use_vertices:
            vv = self.op.vertex_values(coeffs)[..., 0]
            vals.append(np.take_along_axis(vv, self.vert_ids, axis=1))
        if self.use_star:
            vals.append(self._star(tr, mean)[:, None])
        allv = np.concatenate(vals, axis=1)
        vmin, vmax = allv.min(axis=1), allv.max(axis=1)
        theta = np.ones(len(mean))
        low = vmin < lo
        np.divide(mean - lo, mean - vmin, out=theta, where=low)
        th_hi = np.ones(len(mean))
        high = vmax > hi
        np.divide(hi - mean, vmax - mean, out=th_hi, where=high)
        theta = np.clip(np.minimum(theta, th_hi), 0.0, 1.0)
        self.violations += int(np.sum(theta < 1.0))
        coeffs[:, 1:, 0] *= theta[:, None]
        return _with_coeffs(state, coeffs)

    def _apply_euler(self, state):
        model = self.op.model
        coeffs = state.coeffs.copy()
        mean = coeffs[:, 0, :]
        rho_bar = mean[:, 0]
        e_bar = model.internal_energy(mean)
        if np.any(rho_bar <= 0) or np.any(e_bar <= 0):
            bad = int(np.argmax((rho_bar <= 0) | (e_bar <= 0)))
            raise AdmissibilityError(
                "inadmissible cell average (CFL violation or upstream bug)",
                cell=bad)

        # step 1: density positivity
        tr = self._edge_gauss_values(coeffs)                  # (nc,3,Q,d)
        rho_nodes = [tr[..., 0].reshape(len(rho_bar), -1)]
        if self.use_vertices:
            vv = self.op.vertex_values(coeffs)[..., 0]
            rho_nodes.append(np.take_along_axis(vv, self.vert_ids, axis=1))
        if self.use_star:
            rho_nodes.append(self._star(tr[..., 0], rho_bar)[:, None])
        rho_min = np.concatenate(rho_nodes, axis=1).min(axis=1)
        eps1 = np.minimum(rho_bar, self.EPS)
        need = rho_min < eps1
        theta1 = np.ones(len(rho_bar))
        np.divide(rho_bar - eps1, rho_bar - rho_min, out=theta1, where=need)
        theta1 = np.clip(theta1, 0.0, 1.0)
        coeffs[:, 1:, 0] *= theta1[:, None]

        # step 2: internal energy positivity on the density-fixed state
        tr = self._edge_gauss_values(coeffs)
        e_nodes = [model.internal_energy(tr).reshape(len(rho_bar), -1)]
        if self.use_vertices:
            vv = self.op.vertex_values(coeffs)
            ev = model.internal_energy(vv)
            e_nodes.append(np.take_along_axis(ev, self.vert_ids, axis=1))
        if self.use_star:
            e_nodes.append(self._star(model.internal_energy(tr), e_bar)[:, None])
        e_min = np.concatenate(e_nodes, axis=1).min(axis=1)
        eps2 = np.minimum(e_bar, self.EPS)
        need2 = e_min < eps2
        theta2 = np.ones(len(rho_bar))
        np.divide(e_bar - eps2, e_bar - e_min, out=theta2, where=need2)
        theta2 = np.clip(theta2, 0.0, 1.0)
        coeffs[:, 1:, :] *= theta2[:, None, None]

        self.violations += int(np.sum((theta1 < 1.0) | (theta2 < 1.0)))
        return _with_coeffs(state, coeffs)


def _with_coeffs(state, coeffs):
    out = state.copy()
    out.coeffs = coeffs
    return out
