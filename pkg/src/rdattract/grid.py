"""Vertex-centred grids on intervals and rectangles, with the Neumann Laplacian.

Node ordering is lexicographic with axis 1 fastest, i.e. a 2-D field of
shape ``(n2, n1)`` flattened in C order.  Boundary nodes are part of the
grid so that suprema over the closed domain see the boundary exactly.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class GridError(ValueError):
    """Invalid grid descriptor or a field that does not live on the grid."""


@dataclass(frozen=True)
class Grid:
    dim: int
    extents: tuple[float, ...]
    nodes: tuple[int, ...]

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (n - 1) for L, n in zip(self.extents, self.nodes))

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.nodes))

    @property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(0.0, L, n) for L, n in zip(self.extents, self.nodes)]

    @functools.cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(dim, n_nodes)``."""
        if self.dim == 1:
            pts = self.axes[0][None, :]
        else:
            x1, x2 = np.meshgrid(*self.axes, indexing="xy")
            pts = np.stack([x1.ravel(), x2.ravel()])
        pts.setflags(write=False)
        return pts

    @functools.cached_property
    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights per node."""
        ws = []
        for h, n in zip(self.spacing, self.nodes):
            w = np.full(n, h)
            w[0] = w[-1] = h / 2
            ws.append(w)
        if self.dim == 1:
            out = ws[0]
        else:
            out = np.outer(ws[1], ws[0]).ravel()
        out.setflags(write=False)
        return out

    @functools.cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Sparse discrete Laplacian with reflecting ghost nodes."""
        ops = [_neumann_1d(n, h) for n, h in zip(self.nodes, self.spacing)]
        if self.dim == 1:
            return ops[0].tocsr()
        eye1 = sp.identity(self.nodes[0], format="csr")
        eye2 = sp.identity(self.nodes[1], format="csr")
        return (sp.kron(eye2, ops[0]) + sp.kron(ops[1], eye1)).tocsr()

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float).reshape(self.dim, -1)
        ext = np.asarray(self.extents)[:, None]
        return bool(np.all(x >= -tol) and np.all(x <= ext + tol))

    def descriptor(self) -> dict:
        return {"dim": self.dim, "extents": list(self.extents), "nodes": list(self.nodes)}


def _neumann_1d(n: int, h: float) -> sp.lil_matrix:
    # second-order stencil; the ghost value across each end equals the first interior value
    main = np.full(n, -2.0)
    upper = np.ones(n - 1)
    lower = np.ones(n - 1)
    upper[0] = 2.0
    lower[-1] = 2.0
    return sp.diags([lower, main, upper], [-1, 0, 1], format="lil") / h**2


def build_grid(dim: int, extents, nodes) -> Grid:
    """Build a vertex-centred grid on ``[0, L1] (x [0, L2])``.

    ``extents`` and ``nodes`` may be scalars when ``dim == 1``.
    """
    if dim not in (1, 2):
        raise GridError(f"dim must be 1 or 2, got {dim}")
    extents = tuple(float(L) for L in np.atleast_1d(extents))
    nodes = tuple(int(n) for n in np.atleast_1d(nodes))
    if len(extents) != dim or len(nodes) != dim:
        raise GridError(f"need {dim} extents and node counts, got {extents} and {nodes}")
    if any(not np.isfinite(L) or L <= 0 for L in extents):
        raise GridError(f"extents must be positive, got {extents}")
    if any(n < 3 for n in nodes):
        raise GridError(f"need at least 3 nodes per axis, got {nodes}")
    return Grid(dim, extents, nodes)


@dataclass(frozen=True, eq=False)
class Field:
    """Per-species nodal densities, ``values`` of shape ``(n_species, n_nodes)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim == 1:
            vals = vals[None, :]
        if vals.ndim != 2 or vals.shape[1] != self.grid.n_nodes:
            raise GridError(
                f"field shape {vals.shape} does not match grid with {self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n_species(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        """Sample ``func(points) -> (n_species, n_nodes)`` on the grid nodes."""
        return cls(grid, np.atleast_2d(func(grid.points)))

    @classmethod
    def constant(cls, grid: Grid, levels) -> "Field":
        levels = np.atleast_1d(np.asarray(levels, dtype=float))
        return cls(grid, np.repeat(levels[:, None], grid.n_nodes, axis=1))

    def species_array(self, i: int) -> np.ndarray:
        """Values of species ``i`` in the natural array shape ``nodes[::-1]``."""
        return self.values[i].reshape(self.grid.nodes[::-1])

    def to_csv(self, path, names=None) -> None:
        write_field_csv(path, self.grid, self.values, names)


def _check_same_grid(grid: Grid, field: Field) -> None:
    if field.grid != grid:
        raise GridError("field lives on a different grid")


def neumann_laplacian(grid: Grid, field: Field) -> Field:
    _check_same_grid(grid, field)
    return Field(grid, (grid.laplacian @ field.values.T).T)


def field_sup(field: Field, species: int) -> float:
    return float(field.values[species].max())


def field_inf(field: Field, species: int) -> float:
    return float(field.values[species].min())


def write_field_csv(path, grid: Grid, values: np.ndarray, names=None) -> None:
    """One row per node: coordinates, then one column per species."""
    values = np.atleast_2d(values)
    coord_names = ["x1", "x2"][: grid.dim]
    names = names or [f"u{i + 1}" for i in range(values.shape[0])]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(coord_names + list(names))
        for k in range(grid.n_nodes):
            row = [repr(float(c)) for c in grid.points[:, k]]
            row += [repr(float(v)) for v in values[:, k]]
            w.writerow(row)
