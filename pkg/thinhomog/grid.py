"""
Tensor-product grids, nodal fields and Q1 weak-form assembly.

Elements are axis-aligned boxes with (multi)linear shape functions and a
2-point Gauss rule per axis. Nodes are numbered in C order, so on a grid over
Q = omega x (0, 1) the vertical index runs fastest and every vertical column
of nodes is a contiguous block.
"""

from dataclasses import dataclass, field
from functools import cached_property
import itertools

import numpy as np
from scipy.sparse import coo_matrix

from .constants import CELLS_PER_PERIOD, VERTICAL_CELLS
from .errors import ResolutionError

_GAUSS = (1 - 1 / np.sqrt(3)) / 2, (1 + 1 / np.sqrt(3)) / 2
_MIN_CELLS = 16


@dataclass(frozen=True)
class Grid:
    """
    A uniform tensor grid.

    Parameters
    ----------
    lower, upper : tuple of float
        Box corners. For a grid over Q the last axis is the vertical (0, 1).
    nodes : tuple of int
        Nodes per axis (for periodic grids: distinct nodes per axis).
    covers_q : bool
        True for grids over Q = omega x (0, 1), False for grids over omega.
    periodic : bool
        Periodic closure on every axis (cell problems).

    """

    lower: tuple
    upper: tuple
    nodes: tuple
    covers_q: bool = False
    periodic: bool = False

    def __post_init__(self):
        if not len(self.lower) == len(self.upper) == len(self.nodes):
            raise ValueError("Grid bounds and node counts disagree.")
        if any(n < 2 for n in self.nodes):
            raise ValueError("A grid needs at least 2 nodes per axis.")

    @property
    def dim(self):
        return len(self.nodes)

    @property
    def extent(self):
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def cells(self):
        if self.periodic:
            return tuple(self.nodes)
        return tuple(n - 1 for n in self.nodes)

    @property
    def spacing(self):
        return tuple(e / c for e, c in zip(self.extent, self.cells))

    @property
    def size(self):
        return int(np.prod(self.nodes))

    def axis(self, k):
        return self.lower[k] + self.spacing[k] * np.arange(self.nodes[k])

    @cached_property
    def points(self):
        """Node coordinates, shape (size, dim)."""
        mesh = np.meshgrid(
            *[self.axis(k) for k in range(self.dim)], indexing="ij"
        )
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def base(self):
        """The grid over omega underlying a grid over Q."""
        if not self.covers_q:
            return self
        return Grid(self.lower[:-1], self.upper[:-1], self.nodes[:-1])

    def column_index(self):
        """Vertical-column label of every node of a grid over Q."""
        return np.arange(self.size) // self.nodes[-1]

    @classmethod
    def for_spec(
        cls,
        spec,
        cells_per_period=CELLS_PER_PERIOD,
        vertical_cells=VERTICAL_CELLS,
        covers_q=True,
    ):
        """Smallest grid resolving the oscillations of ``spec''."""
        period = spec.shortest_period
        nodes = []
        for extent in spec.base.extent:
            cells = _MIN_CELLS
            if np.isfinite(period):
                cells = max(cells, int(np.ceil(extent * cells_per_period
                                               / period - 1e-9)))
            nodes.append(cells + 1)
        lower, upper = spec.base.lower, spec.base.upper
        if covers_q:
            nodes.append(max(vertical_cells, 2) + 1)
            lower, upper = lower + (0.0,), upper + (1.0,)
        return cls(tuple(lower), tuple(upper), tuple(nodes), covers_q)

    def check_resolution(self, spec, cells_per_period=CELLS_PER_PERIOD):
        """
        Raise if the horizontal spacing misses the fastest oscillation.

        Raises
        ------
        ResolutionError
            Carries the node count per horizontal axis that would suffice.

        """
        period = spec.shortest_period
        if not np.isfinite(period):
            return
        limit = period / cells_per_period
        n = spec.dim
        if any(h > limit * (1 + 1e-9) for h in self.spacing[:n]):
            required = [
                int(np.ceil(e / limit - 1e-9)) + 1 for e in spec.base.extent
            ]
            raise ResolutionError(
                f"Grid spacing {max(self.spacing[:n]):.4g} exceeds "
                f"{limit:.4g}; use at least {required} nodes per axis.",
                required,
            )

    @cached_property
    def _reference(self):
        d = self.dim
        xi = np.array(list(itertools.product(_GAUSS, repeat=d)))
        corners = np.array(list(itertools.product((0, 1), repeat=d)))
        # phi[q, a] and dphi[q, a, k] on the unit cube
        choose = np.where(corners[None], xi[:, None], 1 - xi[:, None])
        phi = np.prod(choose, axis=-1)
        dphi = np.empty(phi.shape + (d,))
        for k in range(d):
            others = np.delete(choose, k, axis=-1)
            sign = np.where(corners[:, k] == 1, 1.0, -1.0)
            dphi[..., k] = sign[None] * np.prod(others, axis=-1)
        weights = np.full(len(xi), 1.0 / 2**d)
        return xi, corners, phi, dphi, weights

    @cached_property
    def connectivity(self):
        """Node indices of every element, shape (elements, 2**dim)."""
        _, corners, _, _, _ = self._reference
        index = np.indices(self.cells).reshape(self.dim, -1).T
        nodes = np.asarray(self.nodes)
        conn = []
        for c in corners:
            multi = index + c
            if self.periodic:
                multi = multi % nodes
            conn.append(np.ravel_multi_index(multi.T, self.nodes))
        return np.stack(conn, axis=-1), index

    @cached_property
    def quadrature(self):
        """
        Physical quadrature data.

        Returns
        -------
        points : np.ndarray
            Quadrature points, shape (elements, nq, dim).
        weights : np.ndarray
            Weights including the cell volume, shape (nq,).
        phi : np.ndarray
            Shape-function values, shape (nq, 2**dim).
        grad : np.ndarray
            Physical shape-function gradients, shape (nq, 2**dim, dim).

        """
        xi, _, phi, dphi, w = self._reference
        _, index = self.connectivity
        h = np.asarray(self.spacing)
        pts = np.asarray(self.lower) + (index[:, None, :] + xi[None]) * h
        return pts, w * np.prod(h), phi, dphi / h

    def _scatter(self, local):
        conn, _ = self.connectivity
        nc = conn.shape[1]
        rows = np.repeat(conn, nc, axis=1).ravel()
        cols = np.tile(conn, (1, nc)).ravel()
        mat = coo_matrix((local.ravel(), (rows, cols)), (self.size,) * 2)
        return mat.tocsr()

    def assemble(self, coefficient=None, reaction=None):
        """
        Assemble int A grad u . grad phi + c u phi.

        Parameters
        ----------
        coefficient : callable, optional
            Maps quadrature points (E, nq, dim) to matrices (E, nq, dim, dim)
            or scalars (E, nq).
        reaction : callable, optional
            Maps quadrature points to scalars (E, nq).

        Returns
        -------
        scipy.sparse.csr_matrix

        """
        pts, w, phi, grad = self.quadrature
        local = np.zeros((pts.shape[0], phi.shape[1], phi.shape[1]))
        if coefficient is not None:
            coef = np.asarray(coefficient(pts), dtype=float)
            if coef.ndim == 2:
                local += np.einsum(
                    "q,qak,eq,qbk->eab", w, grad, coef, grad, optimize=True
                )
            else:
                local += np.einsum(
                    "q,qak,eqkl,qbl->eab", w, grad, coef, grad, optimize=True
                )
        if reaction is not None:
            c = np.broadcast_to(reaction(pts), pts.shape[:2])
            local += np.einsum(
                "q,qa,eq,qb->eab", w, phi, c, phi, optimize=True
            )
        return self._scatter(local)

    def mass(self, weight=None):
        """Consistent mass matrix, optionally weighted."""
        if weight is None:
            return self.assemble(reaction=lambda p: np.ones(p.shape[:2]))
        return self.assemble(reaction=weight)

    def load(self, vector_coefficient):
        """
        Assemble int b . grad phi for a vector field b.

        Parameters
        ----------
        vector_coefficient : callable
            Maps quadrature points to vectors (E, nq, dim).

        """
        pts, w, _, grad = self.quadrature
        b = vector_coefficient(pts)
        local = np.einsum("q,qak,eqk->ea", w, grad, b, optimize=True)
        conn, _ = self.connectivity
        return np.bincount(conn.ravel(), local.ravel(), minlength=self.size)

    def at_quadrature(self, u):
        """Values of a nodal vector at the quadrature points, (E, nq)."""
        conn, _ = self.connectivity
        _, _, phi, _ = self.quadrature
        return np.einsum("qa,ea->eq", phi, np.asarray(u)[conn])

    def gradient_at_quadrature(self, u):
        """Gradients of a nodal vector at the quadrature points."""
        conn, _ = self.connectivity
        _, _, _, grad = self.quadrature
        return np.einsum("qak,ea->eqk", grad, np.asarray(u)[conn])

    def integrate(self, values):
        """Integrate quadrature-point values (E, nq) over the grid."""
        _, w, _, _ = self.quadrature
        return float(np.einsum("q,eq->", w, values))


FIELD_TAGS = (
    "w_eps",  # original problem, pulled back to Q
    "u_eps",  # transformed problem
    "w1_eps",  # simplified problem
    "w_hat_eps",  # reduced problem on omega (u1_eps)
    "w_hat",  # limit problem
    "u0",
    "rhs",
    "corrector",
    "state",
    "eigenfunction",
)


@dataclass
class Field:
    """Nodal values on a grid, tagged with the unknown they approximate."""

    grid: Grid
    values: np.ndarray
    tag: str = "state"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise ValueError(
                f"Field has {self.values.size} values for "
                f"{self.grid.size} nodes."
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"Field {self.tag!r} has non-finite values.")

    def __len__(self):
        return self.values.size

    def with_values(self, values, tag=None):
        return Field(self.grid, values, tag or self.tag, dict(self.meta))

    @classmethod
    def from_function(cls, grid, fn, tag="rhs"):
        """Sample ``fn(points)'' at the grid nodes."""
        return cls(grid, np.asarray(fn(grid.points), dtype=float), tag)
