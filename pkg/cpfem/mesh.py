"""
Structured Q4 plane-strain mesh: one bilinear element per image pixel,
2x2 Gauss integration, sparse global assembly.

Element e = row * nx + col covers pixel labels[row, col]; row index grows
with y. Node id = j * (nx + 1) + i. Local node order is counter-clockwise
from the lower-left corner.
"""
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from core.errors import DivergenceError
from core.types import DeformationMode

GAUSS = 1.0 / np.sqrt(3.0)
XI_NODES = np.array([-1.0, 1.0, 1.0, -1.0])
ETA_NODES = np.array([-1.0, -1.0, 1.0, 1.0])
GAUSS_POINTS = np.array([[-GAUSS, -GAUSS], [GAUSS, -GAUSS], [GAUSS, GAUSS], [-GAUSS, GAUSS]])


class QuadMesh:

    def __init__(self, nx, ny, length_x, length_y=None):
        self.nx = nx
        self.ny = ny
        self.length_x = float(length_x)
        self.length_y = float(length_x if length_y is None else length_y)
        self.hx = self.length_x / nx
        self.hy = self.length_y / ny

        ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
        self.coords = np.column_stack([ii.ravel() * self.hx, jj.ravel() * self.hy])
        self.n_nodes = (nx + 1) * (ny + 1)
        self.n_dof = 2 * self.n_nodes

        col, row = np.meshgrid(np.arange(nx), np.arange(ny))
        col, row = col.ravel(), row.ravel()
        n0 = row * (nx + 1) + col
        self.conn = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])
        self.n_elem = nx * ny
        self.dofs = np.stack([2 * self.conn, 2 * self.conn + 1], axis=-1).reshape(self.n_elem, 8)

        self.dN = self._shape_gradients()        # (4 gp, 4 nodes, 2)
        self.B = self._strain_displacement()     # (4 gp, 3, 8)
        self.det_j = self.hx * self.hy / 4.0     # weight 1 per point

        rows = np.repeat(self.dofs, 8, axis=1)
        cols = np.tile(self.dofs, (1, 8))
        self._rows = rows.ravel()
        self._cols = cols.ravel()

    @property
    def n_points(self):
        return 4 * self.n_elem

    def _shape_gradients(self):
        out = np.empty((4, 4, 2))
        for g, (xi, eta) in enumerate(GAUSS_POINTS):
            dxi = 0.25 * XI_NODES * (1 + eta * ETA_NODES)
            deta = 0.25 * ETA_NODES * (1 + xi * XI_NODES)
            out[g, :, 0] = dxi * 2.0 / self.hx
            out[g, :, 1] = deta * 2.0 / self.hy
        return out

    def _strain_displacement(self):
        B = np.zeros((4, 3, 8))
        for g in range(4):
            dx = self.dN[g, :, 0]
            dy = self.dN[g, :, 1]
            B[g, 0, 0::2] = dx
            B[g, 1, 1::2] = dy
            B[g, 2, 0::2] = dy
            B[g, 2, 1::2] = dx
        return B

    # --- Assembly ---

    def stiffness(self, C):
        """Global stiffness from per-point tangents C (n_points, 3, 3)."""
        C = C.reshape(self.n_elem, 4, 3, 3)
        ke = np.einsum("gia,egij,gjb->eab", self.B, C, self.B) * self.det_j
        return coo_matrix((ke.ravel(), (self._rows, self._cols)),
                          shape=(self.n_dof, self.n_dof)).tocsr()

    def force(self, stress_like):
        """Integral of B^T s over the mesh for per-point vectors (n_points, 3)."""
        s = stress_like.reshape(self.n_elem, 4, 3)
        fe = np.einsum("gia,egi->ea", self.B, s) * self.det_j
        return np.bincount(self.dofs.ravel(), weights=fe.ravel(), minlength=self.n_dof)

    def strain(self, u):
        """Per-point engineering strain (n_points, 3) for nodal displacements u."""
        ue = u[self.dofs]
        return np.einsum("gia,ea->egi", self.B, ue).reshape(self.n_points, 3)

    # --- Nodal projection ---

    def project_to_nodes(self, element_values):
        """Average element values (n_elem, ...) onto nodes."""
        values = np.asarray(element_values, dtype=float)
        flat = values.reshape(self.n_elem, -1)
        counts = np.bincount(self.conn.ravel(), minlength=self.n_nodes).astype(float)
        out = np.empty((self.n_nodes, flat.shape[1]))
        for k in range(flat.shape[1]):
            w = np.repeat(flat[:, k], 4)
            out[:, k] = np.bincount(self.conn.ravel(), weights=w, minlength=self.n_nodes) / counts
        return out.reshape((self.n_nodes,) + values.shape[1:])

    def point_gradient(self, nodal_values):
        """grad of the bilinear interpolant at each point: (n_points, ..., 2)."""
        ve = nodal_values[self.conn]                     # (n_elem, 4, ...)
        grad = np.einsum("gnd,en...->eg...d", self.dN, ve)
        return grad.reshape((self.n_points,) + grad.shape[2:])

    def element_of_points(self):
        return np.repeat(np.arange(self.n_elem), 4)

    # --- Boundary conditions ---

    def boundary_conditions(self, mode):
        """
        (dofs, unit) for a deformation mode. unit holds the prescribed
        displacement per unit of the homogenized strain measure.
        """
        mode = DeformationMode(mode)
        nx, ny = self.nx, self.ny
        idx = np.arange(self.n_nodes).reshape(ny + 1, nx + 1)
        left, right = idx[:, 0], idx[:, -1]
        bottom, top = idx[0, :], idx[-1, :]
        origin = idx[0, 0]
        root3 = np.sqrt(3.0)

        entries = {}

        def fix(nodes, comp, value=0.0):
            for n in np.atleast_1d(nodes):
                entries[2 * int(n) + comp] = value

        if mode == DeformationMode.TensileX:
            fix(left, 0)
            fix(origin, 1)
            fix(right, 0, self.length_x)
        elif mode == DeformationMode.TensileY:
            fix(bottom, 1)
            fix(origin, 0)
            fix(top, 1, self.length_y)
        elif mode == DeformationMode.ShearX:
            fix(bottom, 0)
            fix(bottom, 1)
            fix(top, 0, root3 * self.length_y)
            fix(top, 1)
        else:
            fix(left, 0)
            fix(left, 1)
            fix(right, 1, root3 * self.length_x)
            fix(right, 0)

        dofs = np.array(sorted(entries), dtype=int)
        unit = np.array([entries[d] for d in dofs])
        return dofs, unit

    def solve(self, K, rhs, fixed_dofs, fixed_values, step=None):
        """Solve K du = rhs with du prescribed on fixed_dofs."""
        free = np.setdiff1d(np.arange(self.n_dof), fixed_dofs)
        du = np.zeros(self.n_dof)
        du[fixed_dofs] = fixed_values
        K_ff = K[free][:, free].tocsc()
        K_fp = K[free][:, fixed_dofs]
        b = rhs[free] - K_fp @ du[fixed_dofs]
        du[free] = spsolve(K_ff, b)
        if not np.all(np.isfinite(du)):
            raise DivergenceError("singular or ill-conditioned stiffness", step=step, term="solve")
        return du


def homogenized_stress(stress, mode):
    """Volume-average stress measure for the loading mode (uniform point weights)."""
    mode = DeformationMode(mode)
    mean = stress.mean(axis=0)
    if mode == DeformationMode.TensileX:
        return float(mean[0])
    if mode == DeformationMode.TensileY:
        return float(mean[1])
    return float(np.sqrt(3.0) * mean[2])
