"""Semi-discrete DG spatial operator on modal coefficients.

The operator precomputes all basis/quadrature tables for a fixed (mesh, degree,
model, boundary rules) so that residual evaluation is a handful of einsums over
cell and edge arrays. Interior edge fluxes are computed once per edge and
scattered with opposite signs, which makes the scheme discretely conservative.
"""

from dataclasses import dataclass

import numpy as np

from . import basis, quadrature
from .errors import AdmissibilityError, ConfigError

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass
class ModalState:
    """Per-cell modal coefficients u_K^(l) in R^d, l = 0..L_k."""

    k: int
    coeffs: np.ndarray  # (n_cells, n_modes, d)
    t: float = 0.0

    @property
    def n_cells(self):
        return self.coeffs.shape[0]

    @property
    def d(self):
        return self.coeffs.shape[2]

    def copy(self):
        return ModalState(self.k, self.coeffs.copy(), self.t)

    def cell_averages(self):
        # Psi^(0) = 1 and orthogonality make mode 0 the cell average
        return self.coeffs[:, 0, :]


# ---------------------------------------------------------------------------
# boundary rules
# ---------------------------------------------------------------------------

class BoundaryRule:
    # 'copy' rules reuse the interior polynomial (zero jump in the OE filter);
    # 'state' rules prescribe a pointwise exterior state (degree-0 ghost).
    kind = "state"

    def ghost(self, model, u_int, x, n, t):
        raise NotImplementedError


class Outflow(BoundaryRule):
    kind = "copy"

    def ghost(self, model, u_int, x, n, t):
        return np.array(u_int, copy=True)


class Inflow(BoundaryRule):
    """Fixed exterior state, or a function (x, y, t) -> state."""

    def __init__(self, state):
        self.state = state

    def ghost(self, model, u_int, x, n, t):
        if callable(self.state):
            return np.asarray(self.state(x[..., 0], x[..., 1], t), dtype=float)
        out = np.empty_like(np.asarray(u_int, dtype=float))
        out[...] = np.asarray(self.state, dtype=float)
        return out


class ExactBC(Inflow):
    """Exterior trace from an exact solution (x, y, t) -> state."""

    def __init__(self, fn):
        super().__init__(fn)


class Reflective(BoundaryRule):
    def ghost(self, model, u_int, x, n, t):
        return model.reflect(u_int, n)


class CustomBC(BoundaryRule):
    """fn(model, u_int, x, n, t) -> ghost states (vectorized)."""

    def __init__(self, fn):
        self.fn = fn

    def ghost(self, model, u_int, x, n, t):
        return np.asarray(self.fn(model, u_int, x, n, t), dtype=float)


DEFAULT_RULES = {"OUT": Outflow, "WALL": Reflective}


def ghost_state(spec, model, u_int, x, n, t, tag):
    """Exterior state for one boundary sample under the rule for `tag`."""
    if tag not in spec:
        raise ConfigError(f"boundary tag {tag!r} has no rule")
    u = np.asarray(u_int, dtype=float)[None, :]
    xx = np.asarray(x, dtype=float)[None, :]
    nn = np.asarray(n, dtype=float)[None, :]
    return spec[tag].ghost(model, u, xx, nn, t)[0]


# ---------------------------------------------------------------------------
# spatial operator
# ---------------------------------------------------------------------------

class SpatialOperator:
    """DG residual evaluator for a fixed mesh, degree, model and boundary set."""

    def __init__(self, mesh, model, k, boundary=None):
        if not 1 <= k <= 4:
            raise ConfigError(f"k={k} outside supported range 1..4")
        self.mesh = mesh
        self.model = model
        self.k = k
        self.d = model.n_components
        self.nm = basis.n_modes(k)
        self.Q = k + 1

        # boundary rules
        boundary = dict(boundary or {})
        tags = {t for t in mesh.edge_tag if t is not None}
        for tag in tags:
            if tag not in boundary:
                if tag in DEFAULT_RULES:
                    boundary[tag] = DEFAULT_RULES[tag]()
                else:
                    raise ConfigError(f"boundary tag {tag!r} has no rule")
        self.boundary = boundary

        # interior quadrature tables
        self.int_pts, self.int_w = quadrature.interior_points_ref(k)
        self.basis_int = basis.eval_modes(k, self.int_pts)           # (N, nm)
        self.grad_int = basis.eval_grad(k, self.int_pts)             # (N, nm, 2)
        self.n_int = len(self.int_w)

        # edge quadrature tables (forward = local traversal order)
        tq, wq = quadrature.edge_rule(self.Q)
        self.edge_t, self.edge_w = tq, wq
        ref_fwd = np.empty((3, self.Q, 2))
        for i in range(3):
            a = REF_VERTICES[(i + 1) % 3]
            b = REF_VERTICES[(i + 2) % 3]
            ref_fwd[i] = a[None, :] + tq[:, None] * (b - a)[None, :]
        be_fwd = np.stack([basis.eval_modes(k, ref_fwd[i]) for i in range(3)])
        self.basis_edge = np.stack([be_fwd, be_fwd[:, ::-1]])        # (2,3,Q,nm)

        # per-cell trace tensor in global edge-point order
        fwd = mesh.cell_edge_forward
        self.TE = np.where(fwd[:, :, None, None],
                           self.basis_edge[0][None], self.basis_edge[1][None])

        # vertex tables and derivative tables for the jump machinery
        self.vertex_basis = basis.eval_modes(k, REF_VERTICES)        # (3, nm)
        self.ref_deriv = []
        for j in range(k + 1):
            tab = np.stack([basis.eval_modes(k, REF_VERTICES, r=j - ridx, s=ridx)
                            for ridx in range(j + 1)])               # (j+1,3,nm)
            self.ref_deriv.append(tab)
        self.deriv_transform = [
            basis.physical_derivative_transform(mesh.jac_inv, j)
            for j in range(k + 1)]                                   # (nc,j+1,j+1)

        # geometry gathered per edge (left-cell view)
        lc, ll = mesh.edge_cells[:, 0], mesh.edge_local[:, 0]
        self.edge_normal = mesh.normal[lc, ll]                       # (ne, 2)
        self.edge_length = mesh.edge_len[lc, ll]                     # (ne,)
        pa = mesh.vertices[mesh.edge_vertices[:, 0]]
        pb = mesh.vertices[mesh.edge_vertices[:, 1]]
        self.edge_points = pa[:, None, :] + tq[None, :, None] * (pb - pa)[:, None, :]
        self.edge_endpoints = np.stack([pa, pb], axis=1)             # (ne, 2, 2)

        self.interior_ids = mesh.interior_edge_ids
        self.boundary_ids = mesh.boundary_edge_ids
        self.groups = {}
        for eid in self.boundary_ids:
            self.groups.setdefault(mesh.edge_tag[eid], []).append(eid)
        self.groups = [(self.boundary[tag], np.array(eids))
                       for tag, eids in sorted(self.groups.items())]

        # physical interior quadrature points
        v0 = mesh.vertices[mesh.cells[:, 0]]
        self.int_points_phys = (v0[:, None, :]
                                + np.einsum("qa,cba->cqb", self.int_pts, mesh.jac))

        self.mass = basis.cell_mass(mesh.area, k)                    # (nc, nm)
        # local endpoint vertex indices of each edge, global order, both sides
        self._endpoint_tables()
        self._build_operators()

    def _build_operators(self):
        """Precompute the state-independent residual operators as matrices."""
        mesh = self.mesh
        nc, nm, Q, N = mesh.n_cells, self.nm, self.Q, self.n_int
        self._trace_op = np.ascontiguousarray(
            self.TE.reshape(nc, 3 * Q, nm))
        sign = np.where(mesh.cell_edge_forward, 1.0, -1.0)
        wgt = (sign * mesh.edge_len)[:, :, None] * self.edge_w[None, None, :]
        scatter = wgt[:, :, :, None] * self.TE                        # (nc,3,Q,nm)
        self._scatter_op = np.ascontiguousarray(
            scatter.reshape(nc, 3 * Q, nm).transpose(0, 2, 1))
        # physical gradients and the volume operator area * w_q * dPsi/dx_b
        G = np.einsum("qla,cab->cqlb", self.grad_int, mesh.jac_inv)  # (nc,N,nm,2)
        vol = (mesh.area[:, None, None, None] * self.int_w[None, :, None, None]
               * G)
        self._vol_op = np.ascontiguousarray(
            vol.transpose(0, 2, 1, 3).reshape(nc, nm, N * 2))
        self._inv_mass = 1.0 / self.mass[:, :, None]
        # vertex-derivative operators per order j: (nc, (j+1)*3, nm)
        self._vertex_deriv_op = []
        for j in range(self.k + 1):
            TD = np.einsum("car,rvl->cavl", self.deriv_transform[j],
                           self.ref_deriv[j])                        # (nc,j+1,3,nm)
            self._vertex_deriv_op.append(np.ascontiguousarray(
                TD.reshape(nc, (j + 1) * 3, nm)))

    def _endpoint_tables(self):
        mesh = self.mesh
        il, ir = mesh.edge_local[:, 0], mesh.edge_local[:, 1]
        # left cell traverses (il+1)%3 -> (il+2)%3 in global order
        self.lv_end = np.stack([(il + 1) % 3, (il + 2) % 3], axis=1)
        # right cell traverses its local edge reversed w.r.t. global order
        self.rv_end = np.stack([(ir + 2) % 3, (ir + 1) % 3], axis=1)

    # -- evaluation helpers -------------------------------------------------

    def traces(self, coeffs):
        """Solution values at edge Gauss points: (nc, 3, Q, d), global order."""
        out = np.matmul(self._trace_op, coeffs)
        return out.reshape(len(coeffs), 3, self.Q, coeffs.shape[2])

    def interior_values(self, coeffs):
        """Solution values at interior quadrature nodes: (nc, N, d)."""
        return np.matmul(self.basis_int, coeffs)

    def vertex_values(self, coeffs):
        """Solution values at the 3 cell vertices: (nc, 3, d)."""
        return np.matmul(self.vertex_basis, coeffs)

    def vertex_derivatives(self, coeffs, j):
        """Mixed physical derivatives of total order j at cell vertices.

        Returns (nc, 3, j+1, d); axis 2 indexes alpha = (j - aidx, aidx).
        """
        if j == 0:
            return self.vertex_values(coeffs)[:, :, None, :]
        out = np.matmul(self._vertex_deriv_op[j], coeffs)
        out = out.reshape(len(coeffs), j + 1, 3, coeffs.shape[2])
        return out.transpose(0, 2, 1, 3)

    def evaluate(self, state, cell, points):
        """Evaluate the per-cell polynomial at physical points (…, 2)."""
        ref = self.mesh.physical_to_reference(cell, points)
        vals = basis.eval_modes(self.k, np.atleast_2d(ref))
        return vals @ state.coeffs[cell]

    # -- ghosts -------------------------------------------------------------

    def boundary_ghost_values(self, u_int_b, X_b, n_b, t, order):
        """Exterior states for all boundary edges (stacked in boundary_ids order).

        `order` maps the boundary arrays: u_int_b etc. are indexed by position
        within self.boundary_ids.
        """
        u_ext = np.empty_like(u_int_b)
        pos = {eid: i for i, eid in enumerate(self.boundary_ids)}
        for rule, eids in self.groups:
            idx = np.array([pos[e] for e in eids])
            u_ext[idx] = rule.ghost(self.model, u_int_b[idx], X_b[idx],
                                    n_b[idx], t)
        return u_ext

    def _edge_states(self, coeffs, t):
        """Interior/exterior states at edge Gauss points for every edge."""
        mesh = self.mesh
        TR = self.traces(coeffs)
        lc, ll = mesh.edge_cells[:, 0], mesh.edge_local[:, 0]
        u_int = TR[lc, ll]                                           # (ne,Q,d)
        u_ext = np.empty_like(u_int)
        ii = self.interior_ids
        rc, rl = mesh.edge_cells[ii, 1], mesh.edge_local[ii, 1]
        u_ext[ii] = TR[rc, rl]
        bi = self.boundary_ids
        if len(bi):
            nb = np.broadcast_to(self.edge_normal[bi][:, None, :],
                                 (len(bi), self.Q, 2))
            u_ext[bi] = self.boundary_ghost_values(
                u_int[bi], self.edge_points[bi], nb, t, None)
        return u_int, u_ext

    # -- residual -----------------------------------------------------------

    def residual(self, coeffs, alpha, t=0.0):
        """d(coeffs)/dt of the semi-discrete scheme; shape (nc, nm, d)."""
        mesh = self.mesh
        u_int, u_ext = self._edge_states(coeffs, t)

        if self.model.name == "euler":
            bad = ~(self.model.admissible(u_int) & self.model.admissible(u_ext))
            if np.any(bad):
                eid = int(np.nonzero(bad.any(axis=1))[0][0])
                raise AdmissibilityError(
                    "inadmissible trace at edge quadrature point",
                    cell=int(mesh.edge_cells[eid, 0]), edge=eid)

        fhat = self.model.lf_flux(u_int, u_ext, self.edge_normal[:, None, :],
                                  alpha)                              # (ne,Q,d)

        # edge contributions: -sign * l * sum_nu w_nu fhat Psi
        nc, d = len(coeffs), coeffs.shape[2]
        F_ce = fhat[mesh.cell_edges].reshape(nc, 3 * self.Q, d)
        R = -np.matmul(self._scatter_op, F_ce)

        # volume term: area * sum_q w_q F(u) . grad Psi
        U = self.interior_values(coeffs)
        Fv = self.model.flux_unchecked(U)                             # (nc,N,2,d)
        R += np.matmul(self._vol_op, Fv.reshape(nc, 2 * self.n_int, d))

        return R * self._inv_mass

    # -- projection ---------------------------------------------------------

    def project(self, fn, t=0.0):
        """L2 projection of u0(x, y) onto the modal space; returns ModalState."""
        X = self.int_points_phys
        vals = np.asarray(fn(X[..., 0], X[..., 1]), dtype=float)
        if vals.ndim == 2:  # scalar models
            vals = vals[..., None]
        coeffs = np.einsum("q,cqd,ql->cld", self.int_w, vals, self.basis_int)
        coeffs /= (2.0 * basis.REF_NORMS[: self.nm])[None, :, None]
        return ModalState(self.k, coeffs, t)

    # -- wavespeed bound ----------------------------------------------------

    def max_wavespeed(self, coeffs, t=0.0, mode="sup"):
        """Global LF viscosity parameter.

        mode 'cell_average': max over cells/edges of the wavespeed of the cell
        average. mode 'edge_gauss': max over the edge quadrature traces of
        both sides (the states entering the cell-average update; this is what
        limited runs control). mode 'sup': 'edge_gauss' plus the edge endpoint
        traces.
        """
        mesh = self.mesh
        if mode == "cell_average":
            ubar = coeffs[:, 0, :]
            s = self.model.wavespeed(ubar[:, None, :], mesh.normal)
            return float(np.max(s))
        if mode not in ("sup", "edge_gauss"):
            raise ConfigError(f"unknown wavespeed mode {mode!r}")

        u_int, u_ext = self._edge_states(coeffs, t)
        n = self.edge_normal[:, None, :]
        s = max(float(np.max(self.model.wavespeed(u_int, n))),
                float(np.max(self.model.wavespeed(u_ext, n))))
        if mode == "edge_gauss":
            return s

        # endpoint traces from both sides
        VV = self.vertex_values(coeffs)                               # (nc,3,d)
        lc = mesh.edge_cells[:, 0]
        ue_int = VV[lc[:, None], self.lv_end]                         # (ne,2,d)
        ue_ext = np.empty_like(ue_int)
        ii = self.interior_ids
        rc = mesh.edge_cells[ii, 1]
        ue_ext[ii] = VV[rc[:, None], self.rv_end[ii]]
        bi = self.boundary_ids
        if len(bi):
            nb = np.broadcast_to(self.edge_normal[bi][:, None, :],
                                 (len(bi), 2, 2))
            ue_ext[bi] = self.boundary_ghost_values(
                ue_int[bi], self.edge_endpoints[bi], nb, t, None)
        nn = self.edge_normal[:, None, :]
        s = max(s, float(np.max(self.model.wavespeed(ue_int, nn))),
                float(np.max(self.model.wavespeed(ue_ext, nn))))
        return s
