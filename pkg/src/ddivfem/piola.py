"""Mapping reference tensors and degrees of freedom to physical cells.

A cell K with counterclockwise corners v0..v3 is the image of the reference
square under F(xh) = a + B xh with B = [(v1 - v0)/2, (v3 - v0)/2] and
a = (v0 + v2)/2.  A reference tensor Mh is pushed forward by the
double contravariant transform

    M(F(xh)) = B Mh(xh) B^T / det B,

which preserves the normal-normal trace pairing, the effective shear
pairing, and the corner jumps, and satisfies

    (div M)(F(xh)) = B (divh Mh)(xh) / det B,
    (div div M)(F(xh)) = (divh divh Mh)(xh) / det B.

Physical degrees of freedom are stated in global edge frames: each mesh edge
points from its lower-numbered to its higher-numbered vertex, the tangent t
follows that direction, the normal is n = (t_y, -t_x), and the linear
Legendre weight is -1 at the start and +1 at the end of the edge.  Moments
are normalized by edge length, so they scale like point values.
"""

import numpy as np

from .polys import gauss_rule
from .reference import CORNERS, EDGE_CORNERS, build_reference_basis

#: above this condition number the local dof matrix is considered broken
CONDITION_LIMIT = 1e8

#: Gauss points per edge when integrating traces of the pushed basis
#: (their integrands are polynomials of degree at most seven)
EDGE_QUAD_POINTS = 4


class GeometryError(ValueError):
    """Raised when an element map or dof frame is unusable."""


class ElementMap:
    """Affine map F(xh) = a + B xh from [-1, 1]^2 onto a physical cell."""

    def __init__(self, B, a):
        self.B = np.asarray(B, dtype=float)
        self.a = np.asarray(a, dtype=float)
        self.det = float(np.linalg.det(self.B))
        if self.det <= 0.0:
            raise GeometryError("element map has nonpositive determinant")
        self.Binv = np.linalg.inv(self.B)

    def apply(self, xh, yh):
        """Map reference coordinates to physical coordinates."""
        x = self.a[0] + self.B[0, 0] * xh + self.B[0, 1] * yh
        y = self.a[1] + self.B[1, 0] * xh + self.B[1, 1] * yh
        return x, y

    def pull(self, x, y):
        """Map physical coordinates back to reference coordinates."""
        dx = x - self.a[0]
        dy = y - self.a[1]
        xh = self.Binv[0, 0] * dx + self.Binv[0, 1] * dy
        yh = self.Binv[1, 0] * dx + self.Binv[1, 1] * dy
        return xh, yh


def element_map(mesh, k):
    """ElementMap of cell k, with its corners as images of the reference corners."""
    v = mesh.vertices[mesh.cells[k]]
    B = 0.5 * np.column_stack([v[1] - v[0], v[3] - v[0]])
    a = 0.5 * (v[0] + v[2])
    return ElementMap(B, a)


def push_components(emap, mxx, mxy, myy):
    """Components of B Mh B^T / det B for arrays of reference components."""
    B = emap.B
    b11, b12, b21, b22 = B[0, 0], B[0, 1], B[1, 0], B[1, 1]
    d = emap.det
    pxx = (b11 * b11 * mxx + 2.0 * b11 * b12 * mxy + b12 * b12 * myy) / d
    pxy = (b11 * b21 * mxx + (b11 * b22 + b12 * b21) * mxy + b12 * b22 * myy) / d
    pyy = (b21 * b21 * mxx + 2.0 * b21 * b22 * mxy + b22 * b22 * myy) / d
    return pxx, pxy, pyy


def push_divergence(emap, wx, wy):
    """Components of B (divh Mh) / det B."""
    B, d = emap.B, emap.det
    return (B[0, 0] * wx + B[0, 1] * wy) / d, (B[1, 0] * wx + B[1, 1] * wy) / d


def push_tensor(emap, M, xh, yh):
    """Physical 2x2 tensor value of the pushed SymTensorPoly at (xh, yh)."""
    vals = M.eval(xh, yh)
    pxx, pxy, pyy = push_components(emap, vals[..., 0], vals[..., 1], vals[..., 2])
    return np.stack(
        [np.stack([pxx, pxy], axis=-1), np.stack([pxy, pyy], axis=-1)], axis=-2
    )


class PhysicalDofFrame:
    """Edge and corner frames of one cell in global orientation.

    Attributes
    ----------
    edge_ids : (4,) int
        Global edge index per local edge.
    tangents, normals : (4, 2)
        Global unit frames of those edges (tangent from the lower to the
        higher vertex index, normal the tangent rotated by -90 degrees).
    lengths : (4,)
    forward : (4,) bool
        Whether the local counterclockwise traversal agrees with the global
        edge direction.
    """

    def __init__(self, mesh, k):
        self.cell = k
        self.edge_ids = mesh.cell_edges[k].copy()
        self.forward = mesh.cell_edge_forward[k].copy()
        self.tangents = np.zeros((4, 2))
        self.normals = np.zeros((4, 2))
        self.lengths = np.zeros(4)
        for j, e in enumerate(self.edge_ids):
            vec = mesh.edge_vector(e)
            ln = np.linalg.norm(vec)
            if ln <= 0.0:
                raise GeometryError("edge %d has zero length" % e)
            t = vec / ln
            self.tangents[j] = t
            self.normals[j] = [t[1], -t[0]]
            self.lengths[j] = ln


def _edge_param_points(nq):
    """Gauss nodes and weights on the reference edge parameter (-1, 1)."""
    rule = gauss_rule(nq, dim=1)
    return rule.points, rule.weights


def _reference_edge_points(edge, s):
    """Reference coordinates of the points at traversal parameter s on an edge."""
    a = CORNERS[EDGE_CORNERS[edge][0]]
    b = CORNERS[EDGE_CORNERS[edge][1]]
    xh = 0.5 * (a[0] + b[0]) + 0.5 * (b[0] - a[0]) * s
    yh = 0.5 * (a[1] + b[1]) + 0.5 * (b[1] - a[1]) * s
    return xh, yh


def physical_dofs(emap, frame, M, nq=EDGE_QUAD_POINTS):
    """The 20 physical degrees of freedom of the pushed tensor H_K(M).

    M is a SymTensorPoly on the reference square.  Edge moments are taken in
    the global frames of ``frame`` and divided by edge length; the shear
    moments are evaluated through the integration-by-parts form

        q0 = int_e n.div M ds + [t.Mn](hi) - [t.Mn](lo),
        q1 = int_e n.div M l ds + [t.Mn](hi) + [t.Mn](lo) - (2/|e|) int_e t.Mn ds,

    so only point values and plain integrals of the pushed field are needed.
    Corner jumps are taken in the cell-local outward frames.
    """
    s, w = _edge_param_points(nq)
    wx_p, wy_p = M.div()
    dofs = np.zeros(20)

    for j in range(4):
        xh, yh = _reference_edge_points(j, s)
        vals = M.eval(xh, yh)
        pxx, pxy, pyy = push_components(emap, vals[:, 0], vals[:, 1], vals[:, 2])
        dvx, dvy = push_divergence(emap, wx_p.eval(xh, yh), wy_p.eval(xh, yh))

        t = frame.tangents[j]
        n = frame.normals[j]
        ln = frame.lengths[j]
        nmn = n[0] * n[0] * pxx + 2.0 * n[0] * n[1] * pxy + n[1] * n[1] * pyy
        tmn = t[0] * n[0] * pxx + (t[0] * n[1] + t[1] * n[0]) * pxy + t[1] * n[1] * pyy
        ndiv = n[0] * dvx + n[1] * dvy

        # global Legendre parameter along the edge: +-s depending on direction
        lg = s if frame.forward[j] else -s
        # physical arclength element: |e|/2 per unit of s
        half = 0.5 * ln

        # endpoint values of t.Mn in global orientation
        c0, c1 = EDGE_CORNERS[j]
        ends = []
        for c in (c0, c1):
            A = push_tensor(emap, M, CORNERS[c][0], CORNERS[c][1])
            ends.append(float(t @ A @ n))
        if frame.forward[j]:
            v_lo, v_hi = ends
        else:
            v_hi, v_lo = ends

        dofs[j] = np.sum(w * nmn) * half / ln
        dofs[4 + j] = np.sum(w * nmn * lg) * half / ln
        dofs[8 + j] = np.sum(w * ndiv) * half + (v_hi - v_lo)
        dofs[12 + j] = (
            np.sum(w * ndiv * lg) * half
            + (v_hi + v_lo)
            - (2.0 / ln) * np.sum(w * tmn) * half
        )

    for c in range(4):
        A = push_tensor(emap, M, CORNERS[c][0], CORNERS[c][1])
        j_in, j_out = (c - 1) % 4, c
        t_in = _local_tangent(frame, j_in)
        t_out = _local_tangent(frame, j_out)
        n_in = np.array([t_in[1], -t_in[0]])
        n_out = np.array([t_out[1], -t_out[0]])
        dofs[16 + c] = float(t_in @ A @ n_in - t_out @ A @ n_out)
    return dofs


def _local_tangent(frame, j):
    """Unit tangent of local edge j in counterclockwise traversal."""
    t = frame.tangents[j]
    return t if frame.forward[j] else -t


class LocalBasis:
    """Change of basis between reference shape functions and physical dofs.

    ``T[m, i]`` is the m-th physical degree of freedom of the pushed i-th
    reference shape function; ``Tinv`` maps physical dof values of a tensor
    to its reference expansion coefficients.
    """

    def __init__(self, T):
        self.T = T
        self.cond = float(np.linalg.cond(T))
        if not np.isfinite(self.cond) or self.cond > CONDITION_LIMIT:
            raise GeometryError(
                "local dof matrix condition %.3e exceeds %.1e"
                % (self.cond, CONDITION_LIMIT)
            )
        self.Tinv = np.linalg.inv(T)


def local_basis_matrix(emap, frame, basis=None):
    """LocalBasis of one cell (uncached)."""
    if basis is None:
        basis = build_reference_basis()
    T = np.zeros((20, 20))
    for i, phi in enumerate(basis):
        T[:, i] = physical_dofs(emap, frame, phi)
    return LocalBasis(T)


class BasisCache:
    """Caches LocalBasis objects keyed by map matrix and edge orientation.

    Uniform meshes have a handful of distinct (B, orientation) signatures,
    so each distinct local matrix is inverted once.
    """

    def __init__(self, basis=None):
        self.basis = basis if basis is not None else build_reference_basis()
        self._store = {}

    def key(self, emap, frame):
        return (
            self.B_key(emap),
            tuple(bool(f) for f in frame.forward),
            tuple(np.round(frame.lengths, 14)),
        )

    @staticmethod
    def B_key(emap):
        return tuple(np.round(emap.B.ravel(), 14))

    def get(self, emap, frame):
        key = self.key(emap, frame)
        lb = self._store.get(key)
        if lb is None:
            lb = local_basis_matrix(emap, frame, self.basis)
            self._store[key] = lb
        return lb

    def __len__(self):
        return len(self._store)


def cell_geometry(mesh, k):
    """Convenience: (ElementMap, PhysicalDofFrame) of cell k."""
    return element_map(mesh, k), PhysicalDofFrame(mesh, k)
