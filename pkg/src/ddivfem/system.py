"""Assembly and solution of the mixed plate bending system.

The discrete problem seeks a tensor field M_h in the conforming space and an
elementwise linear deflection u_h such that

    (C^-1 M_h, dM)   - (u_h, div div dM) = -<boundary data, dM>
    (div div M_h, du)                    = (f, du)

for all test fields dM and all elementwise linear du.  Clamped boundary data
(deflection and normal slope) is natural here and enters the right hand
side; moment and shear data is essential and is enforced by Lagrange
multiplier rows pinning the corresponding degrees of freedom.
"""

import numpy as np
import scipy.sparse as sp

from .polys import gauss_rule
from .piola import BasisCache, cell_geometry, element_map, push_components
from .reference import divdiv_matrix
from .interpolation import (
    P1_MASS_DIAG,
    field_edge_dofs,
    field_cell_jump,
)
from .linsolve import solve_saddle
from .space import check_conformity

#: volume rule order for the compliance block; its integrands are rational
#: only through the constant 1/det factor, polynomial of degree six otherwise
VOLUME_QUAD_POINTS = 4

#: rule order for right hand side and boundary data integrals
DATA_QUAD_POINTS = 6


class MaterialError(ValueError):
    """Raised for material parameters without a positive definite law."""


class MaterialLaw:
    """Bending stiffness C with its inverse (compliance) action.

    ``identity`` uses M = grad grad u.  ``isotropic`` uses the scaled law
    C K = E [(1 - nu) K + nu tr(K) I] which requires -1 < nu < 0.5.
    """

    def __init__(self, kind="identity", E=1.0, nu=0.0):
        self.kind = kind
        self.E = float(E)
        self.nu = float(nu)
        if kind == "identity":
            self.E, self.nu = 1.0, 0.0
        elif kind == "isotropic":
            if not (-1.0 < self.nu < 0.5) or self.E <= 0.0:
                raise MaterialError(
                    "isotropic law needs E > 0 and -1 < nu < 0.5, got E=%g nu=%g"
                    % (self.E, self.nu)
                )
        else:
            raise MaterialError("unknown material kind %r" % kind)
        if np.linalg.eigvalsh(self.compliance_gram()).min() <= 0.0:
            raise MaterialError("compliance is not positive definite")

    def apply_compliance(self, mxx, mxy, myy):
        """Componentwise C^-1 M for arrays of tensor components."""
        if self.kind == "identity":
            return mxx, mxy, myy
        trm = mxx + myy
        c = self.nu / (1.0 + self.nu)
        fac = 1.0 / (self.E * (1.0 - self.nu))
        return fac * (mxx - c * trm), fac * mxy, fac * (myy - c * trm)

    def compliance_gram(self):
        """Matrix of the quadratic form M -> C^-1 M : M in (Mxx, Myy, Mxy)."""
        basis = [(1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0)]
        G = np.zeros((3, 3))
        for a, (axx, axy, ayy) in enumerate(basis):
            cxx, cxy, cyy = self.apply_compliance(axx, axy, ayy)
            for b, (bxx, bxy, byy) in enumerate(basis):
                G[a, b] = cxx * bxx + 2.0 * cxy * bxy + cyy * byy
        return G


class DirichletData:
    """Clamped boundary data: deflection g and its gradient."""

    def __init__(self, g, grad_g):
        self.g = g
        self.grad_g = grad_g

    @staticmethod
    def zero():
        return DirichletData(
            lambda x, y: np.zeros_like(np.asarray(x, dtype=float)),
            lambda x, y: np.zeros(np.shape(x) + (2,)),
        )


class NeumannData:
    """Moment/shear boundary data read off an exact tensor field."""

    def __init__(self, field):
        self.field = field


class SaddleSystem:
    """Assembled blocks of the mixed system.

    Attributes
    ----------
    A : csr_matrix, (nm, nm)
        Compliance block on the free tensor dofs.
    B : csr_matrix, (nu, nm)
        Rows are the elementwise linear test functions.
    L : csr_matrix or None, (nc, nm)
        Essential constraint rows.
    G, F, d : ndarrays
        Boundary functional, source functional, constraint values.
    """

    def __init__(self, A, B, L, G, F, d, ndofs, nu):
        self.A, self.B, self.L = A, B, L
        self.G, self.F, self.d = G, F, d
        self.ndofs, self.nu = ndofs, nu

    def full(self):
        """Symmetric indefinite block matrix and right hand side."""
        blocks = [
            [self.A, -self.B.T, None],
            [-self.B, None, None],
            [None, None, None],
        ]
        rhs = [self.G, -self.F]
        if self.L is not None and self.L.shape[0] > 0:
            blocks[0][2] = self.L.T
            blocks[2][0] = self.L
            rhs.append(self.d)
            K = sp.bmat(blocks, format="csc")
        else:
            K = sp.bmat([[blocks[0][0], blocks[0][1]], [blocks[1][0], None]], format="csc")
        return K, np.concatenate(rhs)


def assemble(mesh, dofmap, material=None, cache=None, nq=VOLUME_QUAD_POINTS):
    """Assemble the compliance block A and the div-div block B.

    The compliance block is integrated on the reference square (degree six
    polynomials, so a 4x4 Gauss rule is exact); the div-div block needs no
    quadrature at all since div div maps the reference shape functions into
    linears, whose mass against {1, xh, yh} is known in closed form, and the
    determinant factors cancel under the pushforward.
    """
    if material is None:
        material = MaterialLaw()
    if cache is None:
        cache = BasisCache()

    rule = gauss_rule(nq, dim=2)
    xh, yh = rule.points[:, 0], rule.points[:, 1]
    w = rule.weights
    nb = len(cache.basis)
    phi = np.zeros((nb, len(w), 3))
    for i, p in enumerate(cache.basis):
        phi[i] = p.eval(xh, yh)

    # dd[i, a]: coefficient of div div phi_i on {1, xh, yh}; exact
    dd = divdiv_matrix(cache.basis)
    Bref = dd * P1_MASS_DIAG[None, :]  # (20, 3); <divdiv phi_i, p_a> on the square

    local_cache = {}

    def local_blocks(emap, frame):
        key = cache.key(emap, frame)
        got = local_cache.get(key)
        if got is not None:
            return got
        lb = cache.get(emap, frame)
        # push all shape functions; the 1/det of each factor and the det of
        # the volume element combine to a single 1/det
        pxx, pxy, pyy = push_components(
            emap, phi[:, :, 0], phi[:, :, 1], phi[:, :, 2]
        )
        pxx, pxy, pyy = pxx * emap.det, pxy * emap.det, pyy * emap.det
        cxx, cxy, cyy = material.apply_compliance(pxx, pxy, pyy)
        Ahat = (
            np.einsum("ip,jp,p->ij", cxx, pxx, w)
            + 2.0 * np.einsum("ip,jp,p->ij", cxy, pxy, w)
            + np.einsum("ip,jp,p->ij", cyy, pyy, w)
        ) / emap.det
        A_loc = lb.Tinv.T @ Ahat @ lb.Tinv
        B_loc = Bref.T @ lb.Tinv  # (3, 20), map independent
        got = (A_loc, B_loc)
        local_cache[key] = got
        return got

    rows, cols, vals = [], [], []
    brows, bcols, bvals = [], [], []
    for k in range(mesh.num_cells):
        emap, frame = cell_geometry(mesh, k)
        A_loc, B_loc = local_blocks(emap, frame)
        gids, P = dofmap.cell_incidence(k)
        G = P.T @ A_loc @ P
        rows.append(np.repeat(gids, len(gids)))
        cols.append(np.tile(gids, len(gids)))
        vals.append(G.ravel())
        BP = B_loc @ P
        for a in range(3):
            brows.append(np.full(len(gids), 3 * k + a))
            bcols.append(gids)
            bvals.append(BP[a])

    n = dofmap.ndofs
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    Bmat = sp.coo_matrix(
        (np.concatenate(bvals), (np.concatenate(brows), np.concatenate(bcols))),
        shape=(3 * mesh.num_cells, n),
    ).tocsr()
    return A, Bmat


def source_load(mesh, f, nq=DATA_QUAD_POINTS):
    """Vector of (f, p_a) over all cells in the pulled-back {1, xh, yh} basis."""
    rule = gauss_rule(nq, dim=2)
    xh, yh = rule.points[:, 0], rule.points[:, 1]
    w = rule.weights
    F = np.zeros(3 * mesh.num_cells)
    for k in range(mesh.num_cells):
        emap = element_map(mesh, k)
        x, y = emap.apply(xh, yh)
        fv = f(x, y) * emap.det
        F[3 * k] = np.sum(w * fv)
        F[3 * k + 1] = np.sum(w * fv * xh)
        F[3 * k + 2] = np.sum(w * fv * yh)
    return F


def dirichlet_load(mesh, dofmap, data, nq=DATA_QUAD_POINTS):
    """Boundary functional of clamped data on the free tensor dofs.

    The test space traces reduce to the edge moment basis, so the functional
    has closed form in the data moments: with G0, G1 the integrals of g
    against 1 and the edge Legendre weight, and H0, H1 those of the outward
    normal slope of g,

        load[m0] += H0,      load[m1] += 3 H1,
        load[q0] -= s G0/|e|, load[q1] -= 3 s G1/|e|,

    where s is +1 when the global edge normal points outward.  Each corner
    jump dof of a cell at a Dirichlet boundary vertex receives g(vertex).
    """
    load = np.zeros(dofmap.ndofs)
    rule = gauss_rule(nq, dim=1)
    s_pts, w = rule.points, rule.weights

    dir_edges = mesh.dirichlet_edges()
    for e in dir_edges:
        a, b = mesh.edges[e]
        va, vb = mesh.vertices[a], mesh.vertices[b]
        vec = vb - va
        ln = np.linalg.norm(vec)
        t = vec / ln
        n_edge = np.array([t[1], -t[0]])
        k = mesh.edge_cells[e, 0]
        j = list(mesh.cell_edges[k]).index(e)
        # outward normal of the single adjacent cell on this edge
        _, frame = cell_geometry(mesh, k)
        t_loc = frame.tangents[j] if frame.forward[j] else -frame.tangents[j]
        n_out = np.array([t_loc[1], -t_loc[0]])
        sigma = 1.0 if n_out @ n_edge > 0 else -1.0

        mid = 0.5 * (va + vb)
        x = mid[0] + 0.5 * s_pts * vec[0]
        y = mid[1] + 0.5 * s_pts * vec[1]
        gv = data.g(x, y)
        gr = data.grad_g(x, y)
        dng = n_out[0] * gr[..., 0] + n_out[1] * gr[..., 1]
        half = 0.5 * ln

        G0 = np.sum(w * gv) * half
        G1 = np.sum(w * gv * s_pts) * half
        H0 = np.sum(w * dng) * half
        H1 = np.sum(w * dng * s_pts) * half

        base = 4 * e
        load[base + 0] += H0
        load[base + 1] += 3.0 * H1
        load[base + 2] -= sigma * G0 / ln
        load[base + 3] -= sigma * 3.0 * G1 / ln

    # vertices touching the clamped part: their incident cells' jump dofs
    dir_vertices = set()
    for e in dir_edges:
        dir_vertices.update(int(v) for v in mesh.edges[e])
    for v in sorted(dir_vertices):
        gval = float(data.g(*mesh.vertices[v]))
        for k, c in mesh.vertex_cells[v]:
            gid = dofmap.jump_id[(k, c)]
            if gid >= 0:
                load[gid] += gval
    return load


def neumann_interior_vertices(mesh):
    """Boundary vertices all of whose incident boundary edges are Neumann."""
    incident = {}
    for e in mesh.boundary_edges:
        for v in mesh.edges[e]:
            incident.setdefault(int(v), []).append(mesh.edge_label[e])
    return [v for v, labs in sorted(incident.items()) if all(l == "N" for l in labs)]


def neumann_constraints(mesh, dofmap, data, nq=DATA_QUAD_POINTS):
    """Essential constraint rows for moment/shear boundary data.

    One row per edge moment dof of every Neumann edge, pinned to the data
    functionals; one row per (cell, corner) jump dof at every vertex
    interior to the Neumann part, pinned to the jump of the data tensor as
    seen from that cell.  Returns (L, d) with L sparse of shape (nc, ndofs).
    """
    rows = []
    vals = []
    for e in mesh.neumann_edges():
        dofs = field_edge_dofs(mesh, e, data.field, nq=nq)
        for r in range(4):
            rows.append(4 * e + r)
            vals.append(dofs[r])
    for v in neumann_interior_vertices(mesh):
        for k, c in mesh.vertex_cells[v]:
            gid = dofmap.jump_id[(k, c)]
            if gid < 0:
                raise AssertionError("eliminated jump dof at boundary vertex %d" % v)
            rows.append(gid)
            vals.append(field_cell_jump(mesh, k, c, data.field))
    nc = len(rows)
    L = sp.csr_matrix(
        (np.ones(nc), (np.arange(nc), np.array(rows, dtype=int))),
        shape=(nc, dofmap.ndofs),
    )
    return L, np.array(vals)


def build_system(mesh, dofmap, f, material=None, dirichlet=None, neumann=None,
                 cache=None, nq_data=DATA_QUAD_POINTS):
    """Assemble the complete saddle system for a load and boundary data."""
    if cache is None:
        cache = BasisCache()
    A, B = assemble(mesh, dofmap, material=material, cache=cache)
    F = source_load(mesh, f, nq=nq_data)
    if dirichlet is None:
        dirichlet = DirichletData.zero()
    G = dirichlet_load(mesh, dofmap, dirichlet, nq=nq_data)
    if neumann is not None and len(mesh.neumann_edges()) > 0:
        L, d = neumann_constraints(mesh, dofmap, neumann, nq=nq_data)
    else:
        L, d = None, np.zeros(0)
    return SaddleSystem(A, B, L, G, F, d, dofmap.ndofs, 3 * mesh.num_cells)


def solve_problem(mesh, dofmap, system, cache=None, rtol=1e-10):
    """Direct solve of an assembled system.

    Returns a dict with the tensor coefficients ``m``, the per-cell
    deflection coefficients ``u`` (shape (ncells, 3)), the multipliers,
    solver diagnostics, and a conformity report of the tensor part.
    """
    K, rhs = system.full()
    x, info = solve_saddle(K, rhs, rtol=rtol)
    m = x[: system.ndofs]
    u = x[system.ndofs : system.ndofs + system.nu].reshape(-1, 3)
    lam = x[system.ndofs + system.nu :]
    conf = check_conformity(mesh, dofmap, m, cache=cache)
    return {
        "m": m,
        "u": u,
        "lambda": lam,
        "solver": info,
        "conformity": conf,
        "ddiv_residual": float(np.linalg.norm(system.B @ m - system.F, np.inf)),
    }
