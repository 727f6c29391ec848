"""Euler-Lagrange space discretization.

The quadratic potential of the discrete Lagrangian uses Simpson 1/3 weights
(1/12, 1/3, 1/12) on the three gradient stencils of each interior node; the
stiffness K is its exact Hessian, the generalized mass E is diagonal with the
interval lengths inside and a/beta1, a/mu1 at the boundary nodes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .model import BoundaryVariant, ParameterError, PhysicalParams


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes of [0,1]; x strictly increasing with x[0]=0, x[-1]=1."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise GridError("grid needs at least 3 nodes")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise GridError("grid must span [0, 1]")
        if np.any(np.diff(x) <= 0.0):
            raise GridError("grid nodes must be strictly increasing")
        if abs(np.sum(np.diff(x)) - 1.0) > 1e-12:
            raise GridError("interval lengths must sum to 1")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        """Number of intervals N (nodes are 0..N)."""
        return self.x.size - 1

    @property
    def dx(self) -> np.ndarray:
        """dx[k] = x[k+1] - x[k], k = 0..N-1."""
        return np.diff(self.x)


def build_grid(n: int, spacing="uniform") -> Grid:
    """Uniform grid with n intervals, or explicit node list via spacing."""
    if isinstance(spacing, str):
        if spacing != "uniform":
            raise GridError(f"unknown spacing {spacing!r}")
        if n < 2:
            raise GridError("need at least 2 intervals")
        return Grid(np.linspace(0.0, 1.0, n + 1))
    return Grid(np.asarray(spacing, dtype=float))


def potential_energy(u: np.ndarray, grid: Grid, params: PhysicalParams) -> float:
    """Quadratic potential of the discrete Lagrangian (sign-flipped)."""
    n = grid.n
    u = np.asarray(u, dtype=float)
    if u.shape != (n + 1,):
        raise ValueError(f"expected {n + 1} nodal values, got {u.shape}")
    a, dx = params.a, grid.dx
    i = np.arange(1, n)
    d1 = (u[i] - u[i - 1]) / dx[i - 1]
    d2 = (u[i + 1] - u[i - 1]) / (dx[i - 1] + dx[i])
    d3 = (u[i + 1] - u[i]) / dx[i]
    terms = dx[i - 1] * (a[i - 1] / 12.0 * d1 ** 2 + a[i] / 3.0 * d2 ** 2 + a[i + 1] / 12.0 * d3 ** 2)
    return 0.5 * float(np.sum(terms))


def assemble_stiffness(grid: Grid, params: PhysicalParams) -> np.ndarray:
    """Exact Hessian of potential_energy: P(u) = (1/2) u^T K u, bandwidth 2."""
    n = grid.n
    a, dx = params.a, grid.dx
    K = np.zeros((n + 1, n + 1))
    i = np.arange(1, n)
    # each quadratic term w*(u[j]-u[k])^2/denom^2 in 2*P contributes the usual
    # rank-one difference block
    for j, k, coef, denom in (
        (i, i - 1, a[i - 1] / 12.0, dx[i - 1]),
        (i + 1, i - 1, a[i] / 3.0, dx[i - 1] + dx[i]),
        (i + 1, i, a[i + 1] / 12.0, dx[i]),
    ):
        c = dx[i - 1] * coef / denom ** 2
        np.add.at(K, (j, j), c)
        np.add.at(K, (k, k), c)
        np.add.at(K, (j, k), -c)
        np.add.at(K, (k, j), -c)
    return K


def hessian_oracle(grid: Grid, params: PhysicalParams, h: float = 1e-4) -> np.ndarray:
    """Finite-difference Hessian of potential_energy at u = 0; exact for the
    quadratic P up to round-off. Verification oracle for assemble_stiffness."""
    if h <= 0.0:
        raise ValueError("h must be positive")
    n = grid.n + 1
    eye = np.eye(n)
    p0 = potential_energy(np.zeros(n), grid, params)
    p_single = np.array([potential_energy(h * eye[i], grid, params) for i in range(n)])
    K = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            pij = potential_energy(h * eye[i] + h * eye[j], grid, params)
            K[i, j] = K[j, i] = (pij - p_single[i] - p_single[j] + p0) / h ** 2
    return K


def assemble_mass(grid: Grid, params: PhysicalParams, variant: BoundaryVariant) -> np.ndarray:
    """Diagonal generalized mass: interval lengths at interior nodes,
    a/beta1 and a/mu1 at the dynamic boundary nodes."""
    n = grid.n
    E = np.empty(n + 1)
    E[1:n] = grid.dx[:-1]
    E[n] = params.a[n] / params.beta1
    # Dirichlet-constrained node 0 is eliminated later; the placeholder keeps E positive.
    E[0] = params.a[0] / params.mu1 if variant.dynamic_at_zero else 1.0
    return E


def assemble_dissipation(grid: Grid, params: PhysicalParams, variant: BoundaryVariant) -> np.ndarray:
    """Diagonal dissipation matching system (1): q-weighted interval lengths
    inside, (a/beta1) q1 and (a/mu1) gamma1 at the dynamic boundary nodes."""
    if params.q_lower < 0.0:
        raise ParameterError("negative q rejected")
    n = grid.n
    R = np.zeros(n + 1)
    R[1:n] = params.q[1:n] * grid.dx[:-1]
    R[n] = (params.a[n] / params.beta1) * params.q1
    if variant.dynamic_at_zero:
        R[0] = (params.a[0] / params.mu1) * params.gamma1
    return R


def assemble_io(grid: Grid, params: PhysicalParams, variant: BoundaryVariant):
    """Input vector b (control on the x=1 boundary row), collocated velocity
    output c, and source vector f_d."""
    n = grid.n
    b = np.zeros(n + 1)
    b[n] = params.a[n] / params.beta1
    c_out = np.zeros(n + 1)
    c_out[n] = 1.0
    f_d = np.zeros(n + 1)
    f_d[1:n] = params.f[1:n] * grid.dx[:-1]
    f_d[n] = (params.a[n] / params.beta1) * params.f1
    if variant.dynamic_at_zero:
        f_d[0] = (params.a[0] / params.mu1) * params.f2
    return b, c_out, f_d


@dataclass(frozen=True, eq=False)
class DiscreteSystem:
    """Assembled finite-dimensional system E u'' = -K u - R u' + b U + f_d.

    offset = 1 means node 0 was eliminated by a Dirichlet condition and all
    arrays refer to nodes offset..N.
    """

    grid: Grid
    params: PhysicalParams
    variant: BoundaryVariant
    E: np.ndarray
    K: np.ndarray
    R: np.ndarray
    b: np.ndarray
    c_out: np.ndarray
    f_d: np.ndarray
    offset: int = 0

    @property
    def size(self) -> int:
        return self.E.shape[0]

    def embed(self, vec: np.ndarray) -> np.ndarray:
        """Pad a (possibly reduced) nodal vector back to all N+1 nodes with
        zeros at the constrained nodes."""
        if self.offset == 0:
            return np.asarray(vec, dtype=float)
        return np.concatenate([np.zeros(self.offset), vec])


def apply_dirichlet(sys: DiscreteSystem) -> DiscreteSystem:
    """Eliminate row/column 0 (condition u(t,0) = 0); the reduced K is
    positive definite."""
    if not sys.variant.dirichlet_at_zero:
        raise ParameterError(f"variant {sys.variant.kind} has no Dirichlet node")
    if sys.offset != 0:
        raise ParameterError("Dirichlet node already eliminated")
    return replace(sys, E=sys.E[1:], K=sys.K[1:, 1:], R=sys.R[1:], b=sys.b[1:],
                   c_out=sys.c_out[1:], f_d=sys.f_d[1:], offset=1)


def build_system(grid: Grid, params: PhysicalParams, variant: BoundaryVariant) -> DiscreteSystem:
    """Assemble the full system for the variant and reduce it if the variant
    pins node 0."""
    if params.n_nodes != grid.n + 1:
        raise ParameterError("params sampled on a different grid")
    params.validate()
    K = assemble_stiffness(grid, params)
    E = assemble_mass(grid, params, variant)
    R = assemble_dissipation(grid, params, variant)
    b, c_out, f_d = assemble_io(grid, params, variant)
    sys = DiscreteSystem(grid, params, variant, E, K, R, b, c_out, f_d)
    if variant.dirichlet_at_zero:
        sys = apply_dirichlet(sys)
    return sys


def dump_matrices(sys: DiscreteSystem, path) -> None:
    """Write K (as row,col,value triplets) and the diagonals E, R as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["matrix", "row", "col", "value"])
        for name, diag in (("E", sys.E), ("R", sys.R)):
            for i, v in enumerate(diag):
                writer.writerow([name, i, i, f"{v:.17g}"])
        rows, cols = np.nonzero(sys.K)
        for i, j in zip(rows, cols):
            writer.writerow(["K", int(i), int(j), f"{sys.K[i, j]:.17g}"])
