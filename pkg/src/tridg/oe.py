"""Oscillation-eliminating filter: per-stage exponential modal damping.

After each RK stage, the modes of total degree m >= 1 in every cell are scaled
by exp(-dt * sum_{j<=m} sigma_K^j), where sigma_K^j accumulates, over the three
cell edges, dimensionless jump measures of the j-th mixed derivatives at the
edge endpoints weighted by the local wavespeed over the cell height. Cell
averages are never touched, so the filter is locally conservative.

Two variants: 'componentwise' damps every solution component from its own
jumps; 'rioe' replaces the two momentum jump measures by the maximum of the
normal/tangential momentum jump measures, which restores rotational
equivariance for rotation-invariant systems.
"""

from math import comb, factorial

import numpy as np

from . import basis
from .errors import ConfigError, UnsupportedOperationError

EPS_DEVIATION = 1e-12

MODES = ("componentwise", "rioe")


def damping_prefactor(k, j):
    """Degree-dependent constant (2j+1) / ((2k-1) j!)."""
    return (2 * j + 1) / ((2 * k - 1) * factorial(j))


class OEFilter:
    """Bound to a SpatialOperator; stateless apart from precomputed tables."""

    def __init__(self, op, mode="componentwise", guard_wavespeed=False):
        # guard_wavespeed: use a clamped wavespeed estimate at edge endpoints;
        # enabled in BP-limited runs, where the limiter controls the edge
        # Gauss nodes but not every vertex trace
        if mode not in MODES:
            raise ConfigError(f"oe mode {mode!r} not in {MODES}")
        if mode == "rioe" and not op.model.momentum_components:
            raise UnsupportedOperationError(
                "rioe requires a model with a rotation action")
        self.op = op
        self.mode = mode
        self.guard_wavespeed = guard_wavespeed
        self.k = op.k
        self.A = np.array([damping_prefactor(op.k, j) for j in range(op.k + 1)])
        self.binom = [np.array([comb(j, a) for a in range(j + 1)], dtype=float)
                      for j in range(op.k + 1)]
        mesh = op.mesh
        self.lc = mesh.edge_cells[:, 0]
        self.rc = mesh.edge_cells[:, 1]
        # boundary rule kind per edge ('copy' edges contribute zero jumps)
        self.copy_edge = np.zeros(mesh.n_edges, dtype=bool)
        self.state_ids = []
        for rule, eids in op.groups:
            if rule.kind == "copy":
                self.copy_edge[eids] = True
            else:
                self.state_ids.append(eids)
        self.state_ids = (np.concatenate(self.state_ids)
                          if self.state_ids else np.array([], dtype=int))

    # -- deviations ---------------------------------------------------------

    def global_average(self, coeffs):
        mesh = self.op.mesh
        return mesh.area @ coeffs[:, 0, :] / mesh.area.sum()

    def global_deviation(self, coeffs):
        """(per-component max deviation, momentum-magnitude max deviation).

        Maxima are taken over the interior quadrature nodes of all cells; the
        second value is None unless the model carries momentum components.
        """
        ubar = self.global_average(coeffs)
        vals = self.op.interior_values(coeffs) - ubar[None, None, :]
        dev = np.abs(vals).max(axis=(0, 1))
        mdev = None
        mom = self.op.model.momentum_components
        if mom:
            mdev = float(np.sqrt((vals[..., list(mom)] ** 2)
                                 .sum(axis=-1)).max())
        return dev, mdev

    # -- jump assembly ------------------------------------------------------

    def _endpoint_ghosts(self, coeffs, t):
        """Degree-0 ghost states at the endpoints of 'state'-kind boundary edges."""
        op = self.op
        if len(self.state_ids) == 0:
            return None, None
        ids = self.state_ids
        VV = op.vertex_values(coeffs)
        u_int = VV[self.lc[ids, None], op.lv_end[ids]]          # (nb, 2, d)
        u_ghost = np.empty_like(u_int)
        nrm = op.edge_normal[ids][:, None, :]
        nb = np.broadcast_to(nrm, u_int.shape[:2] + (2,))
        # reuse the operator's per-rule grouping
        for rule, eids in op.groups:
            if rule.kind == "copy":
                continue
            sel = np.isin(ids, eids)
            if not np.any(sel):
                continue
            u_ghost[sel] = rule.ghost(op.model, u_int[sel],
                                      op.edge_endpoints[ids][sel],
                                      nb[sel], t)
        return u_int, u_ghost

    def _edge_jumps(self, coeffs, t):
        """Derivative jumps at edge endpoints for j = 0..k.

        Returns a list; element j has shape (ne, 2, j+1, d) indexed by
        (edge, endpoint, alpha, component). 'copy' boundary edges are zero.
        """
        op = self.op
        mesh = op.mesh
        ne = mesh.n_edges
        ii = op.interior_ids
        rci = self.rc[ii]
        u_bint, u_bghost = self._endpoint_ghosts(coeffs, t)

        jumps = []
        for j in range(self.k + 1):
            Vd = op.vertex_derivatives(coeffs, j)               # (nc,3,j+1,d)
            J = np.zeros((ne, 2, j + 1, coeffs.shape[2]))
            J_int = Vd[self.lc[:, None], op.lv_end]             # (ne,2,j+1,d)
            J[ii] = J_int[ii] - Vd[rci[:, None], op.rv_end[ii]]
            if len(self.state_ids):
                ids = self.state_ids
                if j == 0:
                    J[ids] = u_bint[:, :, None, :] - u_bghost[:, :, None, :]
                else:
                    J[ids] = J_int[ids]
            jumps.append(J)
        return jumps

    def _edge_wavespeed(self, coeffs, t):
        """beta per edge: max wavespeed over the two endpoints and both sides."""
        op = self.op
        mesh = op.mesh
        VV = op.vertex_values(coeffs)
        u_int = VV[self.lc[:, None], op.lv_end]                 # (ne,2,d)
        u_ext = u_int.copy()
        ii = op.interior_ids
        u_ext[ii] = VV[self.rc[ii, None], op.rv_end[ii]]
        if len(self.state_ids):
            _, ghosts = self._endpoint_ghosts(coeffs, t)
            u_ext[self.state_ids] = ghosts
        n = op.edge_normal[:, None, :]
        speed = (op.model.wavespeed_clamped if self.guard_wavespeed
                 else op.model.wavespeed)
        s_int = speed(u_int, n)
        s_ext = speed(u_ext, n)
        return np.maximum(s_int, s_ext).max(axis=1)             # (ne,)

    def jump_measures(self, coeffs, t=0.0):
        """Dimensionless jump measures delta[cell, edge, j, component].

        Component-wise definition; the rotation-equivariant variant replaces
        the momentum entries inside damping_exponents.
        """
        op = self.op
        mesh = op.mesh
        dev, _ = self.global_deviation(coeffs)
        ubar = self.global_average(coeffs)
        jumps = self._edge_jumps(coeffs, t)
        ce = mesh.cell_edges
        h = mesh.height
        active = dev > EPS_DEVIATION * np.maximum(1.0, np.abs(ubar))
        inv_dev = np.where(active, 1.0 / np.where(active, dev, 1.0), 0.0)
        out = np.empty((mesh.n_cells, 3, self.k + 1, coeffs.shape[2]))
        for j in range(self.k + 1):
            S = 0.5 * np.einsum("a,nead->nd", self.binom[j], jumps[j] ** 2)
            out[:, :, j, :] = (self.A[j] * h[:, :, None] ** j
                               * np.sqrt(S[ce]) * inv_dev[None, None, :])
        return out

    def edge_wavespeeds(self, coeffs, t=0.0):
        """Local wavespeed estimate beta per edge (max over endpoints/sides)."""
        return self._edge_wavespeed(coeffs, t)

    # -- damping ------------------------------------------------------------

    def damping_exponents(self, coeffs, dt, t=0.0):
        """Exponents X[c, m-1, d] = dt * sum_{j<=m} sigma_K^j for m = 1..k."""
        op = self.op
        mesh = op.mesh
        d = coeffs.shape[2]
        dev, mdev = self.global_deviation(coeffs)
        ubar = self.global_average(coeffs)

        jumps = self._edge_jumps(coeffs, t)
        beta = self._edge_wavespeed(coeffs, t)

        # trapezoidal endpoint sums, per edge and component
        S = []  # S[j]: (ne, d)
        for j in range(self.k + 1):
            w = self.binom[j]
            S.append(0.5 * np.einsum("a,nead->nd", w, jumps[j] ** 2))

        mom = list(op.model.momentum_components) if self.mode == "rioe" else []
        if mom:
            n1 = op.edge_normal[:, 0][:, None, None]
            n2 = op.edge_normal[:, 1][:, None, None]
            S_mn, S_mt = [], []
            for j in range(self.k + 1):
                jm1 = jumps[j][..., mom[0]]
                jm2 = jumps[j][..., mom[1]]
                jn = n1 * jm1 + n2 * jm2
                jt = -n2 * jm1 + n1 * jm2
                w = self.binom[j]
                S_mn.append(0.5 * np.einsum("a,nea->ne", w, jn ** 2).sum(axis=-1))
                S_mt.append(0.5 * np.einsum("a,nea->ne", w, jt ** 2).sum(axis=-1))

        ce = mesh.cell_edges                                     # (nc, 3)
        h = mesh.height                                          # (nc, 3)
        beta_ce = beta[ce]

        # component guard: quiescent components are not damped
        active = dev > EPS_DEVIATION * np.maximum(1.0, np.abs(ubar))
        inv_dev = np.where(active, 1.0 / np.where(active, dev, 1.0), 0.0)

        sigma = np.zeros((mesh.n_cells, self.k + 1, d))
        for j in range(self.k + 1):
            delta = (self.A[j] * h[:, :, None] ** j
                     * np.sqrt(S[j][ce]) * inv_dev[None, None, :])
            if mom:
                if mdev > EPS_DEVIATION * max(
                        1.0, float(np.hypot(ubar[mom[0]], ubar[mom[1]]))):
                    dn = self.A[j] * h ** j * np.sqrt(S_mn[j][ce]) / mdev
                    dtg = self.A[j] * h ** j * np.sqrt(S_mt[j][ce]) / mdev
                    dhat = np.maximum(dn, dtg)
                else:
                    dhat = np.zeros_like(h)
                delta[:, :, mom] = dhat[:, :, None]
            sigma[:, j, :] = ((beta_ce / h)[:, :, None] * delta).sum(axis=1)

        return dt * np.cumsum(sigma, axis=1)[:, 1:, :]

    def apply(self, state, dt, t=None):
        """Damp high-order modal blocks; the cell averages are untouched."""
        if dt < 0:
            raise ConfigError("dt must be non-negative")
        t = state.t if t is None else t
        X = self.damping_exponents(state.coeffs, dt, t)
        out = state.copy()
        for m in range(1, self.k + 1):
            block = basis.degree_block(m)
            out.coeffs[:, block, :] *= np.exp(-X[:, m - 1, None, :])
        return out
