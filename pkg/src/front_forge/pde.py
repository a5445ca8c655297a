"""Finite-difference Cauchy solver on a rectangular box in 2 or 3 dimensions.

The equation is d_t u = Lap u + f(u), marched with explicit Euler (default)
or an implicit-diffusion/explicit-reaction Crank-Nicolson step.  Boundary
values come from an arbitrary evaluator (Dirichlet) or homogeneous Neumann
mirroring.  An optional co-moving frame subtracts a constant drift along the
last axis via first-order upwinding; it keeps slow fronts inside the box on
long horizons and is excluded from order-of-accuracy claims.

Evaluators follow one convention everywhere: ev(t, x, y) with x of shape
(m, N-1) and y of shape (m,), returning (m,) values in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reaction import ReactionSpec, eval_f


class SolverError(RuntimeError):
    pass


class BlowUpError(SolverError):
    """NaN appeared during stepping; carries a diagnostic field."""

    def __init__(self, message, field_snapshot=None):
        super().__init__(message)
        self.field_snapshot = field_snapshot


@dataclass(frozen=True)
class GridSpec:
    """Node-centred uniform box: node i sits at origin + i * spacing."""

    dims: tuple
    spacing: tuple
    origin: tuple

    def __post_init__(self):
        if not (2 <= len(self.dims) <= 3):
            raise SolverError("only 2-d and 3-d boxes are supported")
        if len(self.spacing) != len(self.dims) or len(self.origin) != len(self.dims):
            raise SolverError("dims, spacing, origin must have matching length")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def axes(self) -> list[np.ndarray]:
        return [self.origin[a] + self.spacing[a] * np.arange(self.dims[a])
                for a in range(self.ndim)]

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, y) arrays for all nodes in row-major order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        flat = [m.ravel() for m in mesh]
        return np.column_stack(flat[:-1]), flat[-1]

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.dims, dtype=bool)
        for a in range(self.ndim):
            sl = [slice(None)] * self.ndim
            sl[a] = 0
            mask[tuple(sl)] = True
            sl[a] = -1
            mask[tuple(sl)] = True
        return mask


@dataclass
class GridField:
    """Sampled scalar field on a grid at one time."""

    grid: GridSpec
    time: float
    values: np.ndarray
    clamp_events: int = 0

    def copy(self) -> "GridField":
        return GridField(self.grid, self.time, self.values.copy(), self.clamp_events)


@dataclass(frozen=True)
class SolverConfig:
    dt: float | None = None           # explicit target step; None = from CFL policy
    cfl_fraction: float = 0.2
    scheme: str = "explicit_euler"    # or "imex_cn"
    boundary: str = "dirichlet_from_evaluator"  # or "homogeneous_neumann"
    snapshot_every: int = 0           # steps between sink calls; 0 = never
    frame_speed: float = 0.0          # co-moving drift along the last axis
    reaction_lipschitz: float = 1.0   # L for the dt stiffness guard


def stable_dt(grid: GridSpec, cfg: SolverConfig) -> float:
    """dt <= cfl_fraction dx^2 / (2 ndim), capped by dt L <= 0.5."""
    diff = cfg.cfl_fraction / (2.0 * sum(1.0 / s**2 for s in grid.spacing))
    stiff = 0.5 / max(cfg.reaction_lipschitz, 1e-30)
    dt = min(diff, stiff)
    if cfg.frame_speed != 0.0:
        dt = min(dt, 0.5 * grid.spacing[-1] / abs(cfg.frame_speed))
    return dt


def sample_evaluator(grid: GridSpec, ev, t: float, frame_speed: float = 0.0,
                     t_ref: float = 0.0) -> np.ndarray:
    """Evaluate ev on all nodes; the frame shift maps grid y to physical y."""
    x, y = grid.node_coords()
    y_phys = y + frame_speed * (t - t_ref)
    return ev(t, x, y_phys).reshape(grid.dims)


def _laplacian_interior(u: np.ndarray, spacing) -> np.ndarray:
    ndim = u.ndim
    core = tuple(slice(1, -1) for _ in range(ndim))
    lap = np.zeros_like(u[core])
    for a in range(ndim):
        lo = tuple(slice(1, -1) if b != a else slice(0, -2) for b in range(ndim))
        hi = tuple(slice(1, -1) if b != a else slice(2, None) for b in range(ndim))
        lap += (u[lo] - 2.0 * u[core] + u[hi]) / spacing[a] ** 2
    return lap


def _advection_interior(u: np.ndarray, spacing, speed: float) -> np.ndarray:
    """+speed * d_y u with first-order upwinding on the last axis."""
    ndim = u.ndim
    core = tuple(slice(1, -1) for _ in range(ndim))
    if speed >= 0.0:
        up = tuple(slice(1, -1) if b != ndim - 1 else slice(2, None) for b in range(ndim))
        return speed * (u[up] - u[core]) / spacing[-1]
    dn = tuple(slice(1, -1) if b != ndim - 1 else slice(0, -2) for b in range(ndim))
    return speed * (u[core] - u[dn]) / spacing[-1]


class _ImexWorkspace:
    """Factorized Crank-Nicolson diffusion operator for one (grid, dt)."""

    def __init__(self, grid: GridSpec, dt: float):
        import scipy.sparse as sp
        from scipy.sparse.linalg import splu

        mats = []
        for a in range(grid.ndim):
            n = grid.dims[a]
            lap1d = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n), format="lil")
            lap1d[0, :] = 0.0
            lap1d[-1, :] = 0.0  # boundary rows handled as identity below
            mats.append(sp.csr_matrix(lap1d) / grid.spacing[a] ** 2)
        eye = [sp.identity(grid.dims[a], format="csr") for a in range(grid.ndim)]
        lap = None
        for a in range(grid.ndim):
            term = None
            for b in range(grid.ndim):
                m = mats[b] if b == a else eye[b]
                term = m if term is None else sp.kron(term, m, format="csr")
            lap = term if lap is None else lap + term
        boundary = grid.boundary_mask().ravel()
        interior = sp.diags((~boundary).astype(float))
        lap = interior @ lap
        n_all = lap.shape[0]
        ident = sp.identity(n_all, format="csr")
        self.lhs = splu((ident - 0.5 * dt * lap).tocsc())
        self.rhs_op = ident + 0.5 * dt * lap
        self.lap = lap
        self.boundary = boundary


def _reaction_callable(spec: ReactionSpec):
    if spec.kind == "cubic":
        th = spec.theta
        return lambda u: u * (u - th) * (1.0 - u)
    return lambda u: eval_f(spec, u)


def step(field: GridField, cfg: SolverConfig, boundary_eval, spec: ReactionSpec,
         dt: float, workspace=None, t_ref: float = 0.0) -> GridField:
    """Advance one step of length dt; boundary layer is refilled at t + dt."""
    u = field.values
    grid = field.grid
    t_new = field.time + dt
    f = _reaction_callable(spec)
    if cfg.scheme == "explicit_euler" and spec.kind == "cubic":
        from . import _kernels

        new = u.copy()
        inv = [1.0 / s**2 for s in grid.spacing]
        if grid.ndim == 2:
            _kernels.euler_2d_cubic(u, new, dt, inv[0], inv[1], spec.theta,
                                    cfg.frame_speed, 1.0 / grid.spacing[-1])
        else:
            _kernels.euler_3d_cubic(u, new, dt, inv[0], inv[1], inv[2], spec.theta,
                                    cfg.frame_speed, 1.0 / grid.spacing[-1])
    elif cfg.scheme == "explicit_euler":
        core = tuple(slice(1, -1) for _ in range(grid.ndim))
        rhs = _laplacian_interior(u, grid.spacing) + f(u[core])
        if cfg.frame_speed != 0.0:
            rhs = rhs + _advection_interior(u, grid.spacing, cfg.frame_speed)
        new = u.copy()
        new[core] = u[core] + dt * rhs
    elif cfg.scheme == "imex_cn":
        if workspace is None:
            raise SolverError("imex_cn needs a prepared workspace")
        flat = u.ravel()
        rhs = workspace.rhs_op @ flat + dt * np.where(workspace.boundary, 0.0, f(flat))
        new = workspace.lhs.solve(rhs).reshape(grid.dims)
    else:
        raise SolverError(f"unknown scheme: {cfg.scheme}")

    clamp_events = field.clamp_events
    if cfg.boundary == "dirichlet_from_evaluator":
        mask = grid.boundary_mask()
        x, y = grid.node_coords()
        flat_mask = mask.ravel()
        y_phys = y[flat_mask] + cfg.frame_speed * (t_new - t_ref)
        vals = boundary_eval(t_new, x[flat_mask], y_phys)
        new[mask] = vals
    elif cfg.boundary == "homogeneous_neumann":
        # second-order mirror: recompute edge nodes from reflected ghosts
        padded = np.pad(u, 1, mode="reflect")
        lap_all = _laplacian_interior(padded, grid.spacing)
        full = u + dt * (lap_all + np.asarray(f(u)))
        if cfg.frame_speed != 0.0:
            full += dt * _advection_interior(padded, grid.spacing, cfg.frame_speed)
        mask = grid.boundary_mask()
        new[mask] = full[mask]
    else:
        raise SolverError(f"unknown boundary mode: {cfg.boundary}")

    if np.isnan(new).any():
        raise BlowUpError("blow-up: NaN during time step",
                          GridField(grid, t_new, new, clamp_events))
    hi = new.max()
    lo = new.min()
    if hi > 1.0 + 1e-9 or lo < -1e-9:
        raise BlowUpError("blow-up: values left [0,1] beyond the drift guard",
                          GridField(grid, t_new, new, clamp_events))
    if hi > 1.0 or lo < 0.0:
        clamp_events += int(hi > 1.0) + int(lo < 0.0)
        np.clip(new, 0.0, 1.0, out=new)
    return GridField(grid, t_new, new, clamp_events)


def solve_cauchy(initial_eval, t0: float, t1: float, grid: GridSpec, cfg: SolverConfig,
                 boundary_eval, spec: ReactionSpec, sink=None, t_ref: float = 0.0) -> GridField:
    """March from initial data at t0 to exactly t1.

    Full steps use the configured dt; one conservative final sub-step lands
    exactly on t1.  `sink(field)` fires every cfg.snapshot_every steps (and on
    the final field).
    """
    if t1 < t0:
        raise SolverError("need t1 >= t0")
    field = GridField(grid, t0, sample_evaluator(grid, initial_eval, t0, cfg.frame_speed, t_ref))
    if t1 == t0:
        return field
    dt = cfg.dt if cfg.dt is not None else stable_dt(grid, cfg)
    workspace = _ImexWorkspace(grid, dt) if cfg.scheme == "imex_cn" else None
    nsteps = int(np.floor((t1 - t0) / dt + 1e-12))
    k = 0
    while field.time < t1 - 1e-12:
        this_dt = dt if k < nsteps else t1 - field.time
        if cfg.scheme == "imex_cn" and k >= nsteps and abs(this_dt - dt) > 1e-14:
            workspace = _ImexWorkspace(grid, this_dt)
        field = step(field, cfg, boundary_eval, spec, this_dt, workspace, t_ref)
        k += 1
        if sink is not None and cfg.snapshot_every and k % cfg.snapshot_every == 0:
            sink(field)
    if sink is not None:
        sink(field)
    return field
