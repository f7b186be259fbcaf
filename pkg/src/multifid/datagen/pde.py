"""PDE field generators: 1D viscous flow fields and 2D Laplace potentials.

Both solvers are dependency-free finite-difference schemes chosen for
robustness at coarse meshes: the time-dependent solver combines implicit
(tridiagonal) diffusion with explicit first-order upwind advection and
sub-steps internally to keep the advective CFL number at 0.5; the Laplace
solver is red-black SOR on the five-point stencil.  Both schemes are
monotone, so the discrete maximum principle holds for their solutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError, NumericError


@dataclass
class FieldGrid:
    """A 2D solution field with its axis extents."""

    values: np.ndarray        # (rows, cols)
    row_extent: tuple = (0.0, 1.0)
    col_extent: tuple = (0.0, 1.0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or min(self.values.shape) < 2:
            raise ConfigError(f"field must be 2D with dims > 1, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NumericError("field contains non-finite values")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# Viscous 1D transport: u_t + u u_x = nu u_xx on x in [0,1], t in [0,3],
# homogeneous Dirichlet boundaries, default initial profile sin(x pi / 2).
# ---------------------------------------------------------------------------

VISCOSITY_RANGE = (0.001, 0.1)
TIME_HORIZON = 3.0
ADVECTIVE_CFL = 0.5


def _default_initial(x: np.ndarray) -> np.ndarray:
    return np.sin(x * np.pi / 2.0)


def solve_burgers(nu: float, n_space: int, n_time: int, initial=None) -> FieldGrid:
    """Solve the viscous transport equation on an n_space x n_time output grid.

    ``initial`` (test hook) may be a callable of x or an array of length
    n_space; boundary values are forced to zero.  Rows index space, columns
    index the output times including t = 0.
    """
    if not VISCOSITY_RANGE[0] <= nu <= VISCOSITY_RANGE[1]:
        raise DomainError(f"viscosity {nu} outside {VISCOSITY_RANGE}")
    if n_space < 8 or n_time < 8:
        raise ConfigError(f"mesh must be at least 8x8, got {n_space}x{n_time}")

    x = np.linspace(0.0, 1.0, n_space)
    dx = x[1] - x[0]
    if initial is None:
        u = _default_initial(x)
    elif callable(initial):
        u = np.asarray(initial(x), dtype=np.float64).copy()
    else:
        u = np.asarray(initial, dtype=np.float64).copy()
        if u.shape != (n_space,):
            raise ConfigError(f"initial profile must have shape ({n_space},)")
    u[0] = 0.0
    u[-1] = 0.0

    # the scheme is monotone, so |u| never exceeds its initial maximum and a
    # CFL bound from the initial profile is valid for the whole horizon
    u_max = max(1.0, float(np.max(np.abs(u))))
    dt_out = TIME_HORIZON / (n_time - 1)
    n_sub = max(1, int(np.ceil(dt_out * u_max / (ADVECTIVE_CFL * dx))))
    dt = dt_out / n_sub

    # implicit diffusion operator on interior nodes, factored once
    m = n_space - 2
    lap = (np.diag(np.full(m, -2.0)) + np.diag(np.ones(m - 1), 1)
           + np.diag(np.ones(m - 1), -1)) / (dx * dx)
    a_inv = np.linalg.inv(np.eye(m) - nu * dt * lap)

    field = np.empty((n_space, n_time))
    field[:, 0] = u
    for step in range(1, n_time):
        for _ in range(n_sub):
            interior = u[1:-1]
            back_diff = (u[1:-1] - u[:-2]) / dx
            fwd_diff = (u[2:] - u[1:-1]) / dx
            slope = np.where(interior >= 0.0, back_diff, fwd_diff)
            star = interior - dt * interior * slope
            u = np.concatenate(([0.0], a_inv @ star, [0.0]))
        if not np.all(np.isfinite(u)):
            raise NumericError(f"solver diverged at nu={nu}, mesh {n_space}x{n_time}")
        field[:, step] = u
    return FieldGrid(field, row_extent=(0.0, 1.0), col_extent=(0.0, TIME_HORIZON))


# ---------------------------------------------------------------------------
# Laplace potential on the unit square: five-point stencil, constant border
# values plus one pinned interior node at the grid point nearest the centre.
# ---------------------------------------------------------------------------

POISSON_VALUE_RANGE = (0.1, 0.9)
_SOR_MAX_ITER = 200_000


def solve_laplace_dirichlet(top, bottom, left, right, n: int, center=None,
                            tol: float = 1e-12) -> FieldGrid:
    """Red-black SOR solve of the five-point Laplace stencil on an n x n grid.

    Border arguments may be scalars or length-n arrays (rows 0 / n-1 are
    bottom / top, columns 0 / n-1 are left / right; left/right win the
    corners).  ``center`` pins the node at (n//2, n//2).  Iterates until the
    unscaled stencil residual max |u_N + u_S + u_E + u_W - 4u| drops below
    ``tol``.
    """
    if n < 4:
        raise ConfigError(f"grid must be at least 4x4, got n={n}")

    def border(v):
        arr = np.full(n, float(v)) if np.ndim(v) == 0 else np.asarray(v, dtype=np.float64)
        if arr.shape != (n,):
            raise ConfigError(f"border must be scalar or length-{n}")
        return arr

    u = np.zeros((n, n))
    u[0, :] = border(bottom)
    u[-1, :] = border(top)
    u[:, 0] = border(left)
    u[:, -1] = border(right)
    # start the interior at the boundary mean so constant problems converge
    # immediately
    u[1:-1, 1:-1] = (u[0, :].sum() + u[-1, :].sum() + u[1:-1, 0].sum()
                     + u[1:-1, -1].sum()) / (4 * n - 4)

    pinned = None
    if center is not None:
        pinned = (n // 2, n // 2)
        u[pinned] = float(center)

    omega = 2.0 / (1.0 + np.sin(np.pi / (n - 1)))
    rows, cols = np.meshgrid(np.arange(1, n - 1), np.arange(1, n - 1), indexing="ij")
    parity = (rows + cols) % 2
    masks = [parity == 0, parity == 1]
    if pinned is not None:
        free = ~((rows == pinned[0]) & (cols == pinned[1]))
        masks = [m & free for m in masks]
    else:
        free = np.ones_like(parity, dtype=bool)

    for _ in range(_SOR_MAX_ITER):
        for mask in masks:
            nb = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2])
            interior = u[1:-1, 1:-1]
            interior[mask] += omega * (nb[mask] / 4.0 - interior[mask])
        nb = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2])
        residual = np.abs(nb - 4.0 * u[1:-1, 1:-1])[free]
        if residual.size == 0 or residual.max() < tol:
            break
    else:
        raise NumericError(f"SOR failed to reach residual {tol} on {n}x{n} grid")
    return FieldGrid(u)


def solve_poisson(borders, center: float, n: int) -> FieldGrid:
    """Benchmark entry point: four constant borders (left, right, bottom, top)
    plus a centre value, all required to lie in [0.1, 0.9]."""
    borders = np.asarray(borders, dtype=np.float64)
    if borders.shape != (4,):
        raise ConfigError(f"expected 4 border values, got shape {borders.shape}")
    values = np.append(borders, center)
    if np.any(values < POISSON_VALUE_RANGE[0]) or np.any(values > POISSON_VALUE_RANGE[1]):
        raise DomainError(f"border/centre values {values.tolist()} outside {POISSON_VALUE_RANGE}")
    if n < 8:
        raise ConfigError(f"benchmark grid must be at least 8x8, got n={n}")
    left, right, bottom, top = borders
    return solve_laplace_dirichlet(top, bottom, left, right, n, center=center)


def upscale_bilinear(field: FieldGrid, out_rows: int, out_cols: int) -> FieldGrid:
    """Bilinear interpolation onto an out_rows x out_cols grid over the same
    normalized extent; corner values are preserved exactly."""
    if out_rows < 2 or out_cols < 2:
        raise ConfigError(f"target size must be at least 2x2, got {out_rows}x{out_cols}")
    src = field.values
    r_pos = np.arange(out_rows) * (src.shape[0] - 1) / (out_rows - 1)
    c_pos = np.arange(out_cols) * (src.shape[1] - 1) / (out_cols - 1)
    r0 = np.minimum(r_pos.astype(int), src.shape[0] - 2)
    c0 = np.minimum(c_pos.astype(int), src.shape[1] - 2)
    rf = (r_pos - r0)[:, None]
    cf = (c_pos - c0)[None, :]
    tl = src[np.ix_(r0, c0)]
    tr = src[np.ix_(r0, c0 + 1)]
    bl = src[np.ix_(r0 + 1, c0)]
    br = src[np.ix_(r0 + 1, c0 + 1)]
    out = ((1 - rf) * (1 - cf) * tl + (1 - rf) * cf * tr
           + rf * (1 - cf) * bl + rf * cf * br)
    return FieldGrid(out, row_extent=field.row_extent, col_extent=field.col_extent)
