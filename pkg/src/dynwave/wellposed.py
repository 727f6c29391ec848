"""Resolvent and monotonicity checks for the boundary-coupled generator.

The unbounded part G of the generator acts on z = (z1, z2, z3, z4, z5) as
(-z2, -(a z1')' + z2 + z1, beta1 z1'(1), 0, -mu1 z1'(0)); solving
(I + G) z = y reduces to the Robin problem 3 z1 - (a z1')' = 2 y1 + y2.

All difference operators share one flux discretization (interval-midpoint a,
one-sided second-order endpoint derivatives), so the discrete integration by
parts in the pairing cancels exactly and the resolvent is an exact discrete
fixed point of I + G.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .discretize import Grid
from .model import PhysicalParams


@dataclass(frozen=True)
class GeneratorInput:
    y1: np.ndarray
    y2: np.ndarray
    y3: float
    y4: float
    y5: float


@dataclass(frozen=True)
class GeneratorOutput:
    z1: np.ndarray
    z2: np.ndarray
    z3: float
    z4: float
    z5: float


def _one_sided(grid: Grid):
    """Second-order one-sided stencils for u'(0) and u'(1).

    Returns ((c0, c1, c2), (cN, cN1, cN2)) acting on the first/last three
    nodal values.
    """
    h1, h2 = grid.dx[0], grid.dx[1]
    left = (-(2.0 * h1 + h2) / (h1 * (h1 + h2)),
            (h1 + h2) / (h1 * h2),
            -h1 / (h2 * (h1 + h2)))
    g1, g2 = grid.dx[-1], grid.dx[-2]
    right = ((2.0 * g1 + g2) / (g1 * (g1 + g2)),
             -(g1 + g2) / (g1 * g2),
             g1 / (g2 * (g1 + g2)))
    return left, right


def _endpoint_derivatives(z1: np.ndarray, grid: Grid) -> tuple[float, float]:
    left, right = _one_sided(grid)
    d0 = left[0] * z1[0] + left[1] * z1[1] + left[2] * z1[2]
    d1 = right[0] * z1[-1] + right[1] * z1[-2] + right[2] * z1[-3]
    return float(d0), float(d1)


def _fluxes(z1: np.ndarray, grid: Grid, params: PhysicalParams) -> np.ndarray:
    """Midpoint fluxes a_{i+1/2} (z1[i+1]-z1[i])/dx[i] on the N intervals."""
    a_mid = 0.5 * (params.a[:-1] + params.a[1:])
    return a_mid * np.diff(z1) / grid.dx


def _trap_weights(grid: Grid) -> np.ndarray:
    w = np.zeros(grid.n + 1)
    w[:-1] += 0.5 * grid.dx
    w[1:] += 0.5 * grid.dx
    return w


def _diffusion(z1: np.ndarray, grid: Grid, params: PhysicalParams) -> np.ndarray:
    """(a z1')' at every node: interior flux differences over the trapezoid
    cell, boundary cells closed with the one-sided endpoint fluxes."""
    flux = _fluxes(z1, grid, params)
    d0, d1 = _endpoint_derivatives(z1, grid)
    w = _trap_weights(grid)
    out = np.empty(grid.n + 1)
    out[1:-1] = (flux[1:] - flux[:-1]) / w[1:-1]
    out[0] = (flux[0] - params.a[0] * d0) / w[0]
    out[-1] = (params.a[-1] * d1 - flux[-1]) / w[-1]
    return out


def resolvent_solve(y: GeneratorInput, params: PhysicalParams, grid: Grid) -> GeneratorOutput:
    """Solve (I + G) z = y.

    The Robin problem 3 z1 - (a z1')' = 2 y1 + y2 with
    beta1 z1'(1) + z1(1) = y3 + y1(1), -mu1 z1'(0) + z1(0) = y5 + y1(0)
    is solved with the shared flux discretization; then z2 = z1 - y1,
    z3 = y3 - beta1 z1'(1), z4 = y4, z5 = y5 + mu1 z1'(0).
    """
    n = grid.n
    y1 = np.asarray(y.y1, dtype=float)
    y2 = np.asarray(y.y2, dtype=float)
    if y1.shape != (n + 1,) or y2.shape != (n + 1,):
        raise ValueError("y1, y2 must be nodal vectors")
    a_mid = 0.5 * (params.a[:-1] + params.a[1:])
    w = _trap_weights(grid)
    A = np.zeros((n + 1, n + 1))
    rhs = np.empty(n + 1)
    i = np.arange(1, n)
    cw = a_mid[:-1] / grid.dx[:-1] / w[i]  # west coupling of node i
    ce = a_mid[1:] / grid.dx[1:] / w[i]
    A[i, i - 1] = -cw
    A[i, i + 1] = -ce
    A[i, i] = 3.0 + cw + ce
    rhs[1:n] = 2.0 * y1[1:n] + y2[1:n]
    left, right = _one_sided(grid)
    A[0, 0] = -params.mu1 * left[0] + 1.0
    A[0, 1] = -params.mu1 * left[1]
    A[0, 2] = -params.mu1 * left[2]
    rhs[0] = y.y5 + y1[0]
    A[n, n] = params.beta1 * right[0] + 1.0
    A[n, n - 1] = params.beta1 * right[1]
    A[n, n - 2] = params.beta1 * right[2]
    rhs[n] = y.y3 + y1[-1]
    z1 = np.linalg.solve(A, rhs)
    d0, d1 = _endpoint_derivatives(z1, grid)
    return GeneratorOutput(z1=z1, z2=z1 - y1, z3=y.y3 - params.beta1 * d1,
                           z4=y.y4, z5=y.y5 + params.mu1 * d0)


def apply_G(z: GeneratorOutput, params: PhysicalParams, grid: Grid) -> GeneratorInput:
    """Evaluate G z with the same difference operators as resolvent_solve."""
    d0, d1 = _endpoint_derivatives(z.z1, grid)
    g2 = -_diffusion(z.z1, grid, params) + z.z2 + z.z1
    return GeneratorInput(y1=-z.z2, y2=g2, y3=params.beta1 * d1,
                          y4=0.0, y5=-params.mu1 * d0)


def fixed_point_residual(z: GeneratorOutput, y: GeneratorInput,
                         params: PhysicalParams, grid: Grid) -> float:
    """max-norm of z + Gz - y, second component measured at interior nodes
    only (the boundary nodes carry the Robin rows, not the bulk equation)."""
    gz = apply_G(z, params, grid)
    r1 = float(np.max(np.abs(z.z1 + gz.y1 - y.y1)))
    r2 = float(np.max(np.abs((z.z2 + gz.y2 - y.y2)[1:-1])))
    r3 = abs(z.z3 + gz.y3 - y.y3)
    r4 = abs(z.z4 + gz.y4 - y.y4)
    r5 = abs(z.z5 + gz.y5 - y.y5)
    return max(r1, r2, r3, r4, r5)


def inner_product(z: GeneratorOutput, w: GeneratorOutput,
                  params: PhysicalParams, grid: Grid) -> float:
    """<z, w> = int (z1 w1 + z2 w2 + a z1' w1') + (a(1)/beta1) z3 w3
    + z4 w4 + (a(0)/mu1) z5 w5."""
    tw = _trap_weights(grid)
    val = float(tw @ (z.z1 * w.z1 + z.z2 * w.z2))
    a_mid = 0.5 * (params.a[:-1] + params.a[1:])
    val += float(np.sum(a_mid * np.diff(z.z1) * np.diff(w.z1) / grid.dx))
    val += (params.a[-1] / params.beta1) * z.z3 * w.z3
    val += z.z4 * w.z4
    val += (params.a[0] / params.mu1) * z.z5 * w.z5
    return val


def monotonicity_pairing(z: GeneratorOutput, params: PhysicalParams,
                         grid: Grid) -> tuple[float, float]:
    """<z, Gz> evaluated in flux (summation-by-parts) form, together with the
    reference int z2^2; the two coincide for admissible z."""
    scale = 1.0 + float(np.max(np.abs(z.z2)))
    if abs(z.z2[-1] - z.z3) > 1e-8 * scale or abs(z.z2[0] - z.z5) > 1e-8 * scale:
        raise ValueError("z violates the domain conditions z2(1)=z3, z2(0)=z5")
    tw = _trap_weights(grid)
    flux = _fluxes(z.z1, grid, params)
    d0, d1 = _endpoint_derivatives(z.z1, grid)
    ref = float(tw @ (z.z2 * z.z2))
    # int z2 (a z1')' in exact Abel-summed form, then the continuum identity
    # <z,Gz> = int z2^2 - int z2 (a z1')' - int a z1' z2'
    #          + a(1) z3 z1'(1) - a(0) z5 z1'(0)
    ibp = params.a[-1] * d1 * z.z2[-1] - params.a[0] * d0 * z.z2[0] \
        - float(np.sum(flux * np.diff(z.z2)))
    cross = float(np.sum(flux * np.diff(z.z2)))
    pairing = ref - ibp - cross + params.a[-1] * z.z3 * d1 - params.a[0] * z.z5 * d0
    return pairing, ref


def dump_resolvent(y: GeneratorInput, z: GeneratorOutput,
                   params: PhysicalParams, grid: Grid, path) -> None:
    """CSV with nodal y, z and the pointwise bulk residual for inspection."""
    bulk = 3.0 * z.z1 - _diffusion(z.z1, grid, params) - 2.0 * np.asarray(y.y1) - np.asarray(y.y2)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y1", "y2", "z1", "z2", "bulk_residual"])
        for k in range(grid.n + 1):
            writer.writerow([f"{grid.x[k]:.17g}", f"{y.y1[k]:.17g}", f"{y.y2[k]:.17g}",
                             f"{z.z1[k]:.17g}", f"{z.z2[k]:.17g}", f"{bulk[k]:.17g}"])
        writer.writerow(["scalar", "y3", f"{y.y3:.17g}", "z3", f"{z.z3:.17g}", ""])
        writer.writerow(["scalar", "y4", f"{y.y4:.17g}", "z4", f"{z.z4:.17g}", ""])
        writer.writerow(["scalar", "y5", f"{y.y5:.17g}", "z5", f"{z.z5:.17g}", ""])
