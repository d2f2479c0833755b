"""Time stepping for the parabolic half-space problem.

The elliptic machinery treats the spectral parameter as data; here it
becomes a genuine time derivative.  Per tangential frequency the
normal direction is collocated on the graded ray mesh, boundary rows
replace the first collocation equations, and the resulting stiff
linear systems are advanced by a two-stage stiffly accurate L-stable
diagonally implicit scheme.  Around the solver sit the data-class
tools: trace-exponent arithmetic, discrete fractional seminorms, the
initial-trace compatibility check, and a harness measuring how the
ratio of solution regularity to data size behaves under refinement.
"""

import math
from fractions import Fraction

import numpy as np
import scipy.linalg

from .ellipticity import ellipticity_angle
from .errors import ArgumentError, AssumptionError, ConsistencyError
from .grids import Grid, quadrature_weights
from .halfspace import TOL_BC, TOL_PDE
from .lopatinskii import ls_sweep
from .symbols import multi_indices

__all__ = [
    "TOL_COMPAT",
    "kappa_exponent",
    "slobodetskii_seminorm",
    "fractional_space_norms",
    "ParabolicProblem",
    "DataClassReport",
    "SolutionHistory",
    "validate_data",
    "solve_parabolic",
    "mr_ratio_harness",
]

# initial-trace compatibility tolerance (relative)
TOL_COMPAT = 1e-6
# two-stage stiffly accurate DIRK, L-stable, order 2
_GAMMA = 1.0 - 1.0 / math.sqrt(2.0)
_TINY = 1e-300


def kappa_exponent(m, k, p):
    """Temporal trace-smoothness exponent of the order-k boundary datum.

    Returns the exact rational ``(2m - k - 1/p) / (2m)`` whenever ``p``
    is representable (integers and binary floats are), so equality
    tests against fractions like 3/4 are legitimate.
    """
    if m < 1 or k < 0 or k > 2 * m - 1:
        raise ArgumentError("need 1 <= k+1 <= 2m, got m=%s k=%s" % (m, k))
    if p <= 1:
        raise ArgumentError("time exponent p must exceed 1, got %s" % (p,))
    return (Fraction(2 * m - k) - 1 / Fraction(p)) / (2 * m)


def slobodetskii_seminorm(values, nodes, order, p=2, cell=1.0, band=1,
                          period=None):
    """Discrete fractional seminorm by double-sum quadrature.

    .. math:: \\Bigl(\\sum_{|i-j| > b} \\frac{|v_i - v_j|^p}
              {|t_i - t_j|^{1 + \\sigma p}} w_i w_j\\Bigr)^{1/p}

    Parameters
    ----------
    values : array, shape (len(nodes), ...)
        Field sampled on the nodes; trailing axes are reduced by the
        p-sum with weight ``cell`` (their uniform cell volume).
    nodes : 1-D array
        Sample locations, strictly increasing.
    order : float
        Fractional order sigma in (0, 1).
    band : int
        Diagonal exclusion half-width in index units; the default skips
        adjacent-node pairs, whose difference quotients only replicate
        the first derivative.
    period : float, optional
        Periodic wrap distance (for tangential axes).
    """
    if not 0.0 < order < 1.0:
        raise ArgumentError("fractional order must lie in (0, 1), got %s"
                            % (order,))
    nodes = np.asarray(nodes, dtype=float)
    vals = np.asarray(values, dtype=complex).reshape(len(nodes), -1)
    w = quadrature_weights(nodes)
    total = 0.0
    for i in range(len(nodes)):
        dist = np.abs(nodes - nodes[i])
        if period is not None:
            dist = np.minimum(dist, period - dist)
        mask = np.abs(np.arange(len(nodes)) - i) > band
        if period is not None:
            # wrap-around neighbours are adjacent too
            mask &= (dist > band * np.diff(nodes).max() * 0.999)
        if not mask.any():
            continue
        diff_p = (np.abs(vals[mask] - vals[i]) ** p).sum(axis=1) * cell
        total += float((diff_p * w[mask] / dist[mask] ** (1.0 + order * p)
                        ).sum() * w[i])
    return total ** (1.0 / p)


def _tangential_derivative(gvals, grid, axis_orders):
    """Spectral tangential derivative D^beta on torus samples."""
    out = np.fft.fftn(np.asarray(gvals, dtype=complex),
                      axes=tuple(range(grid.n)))
    for ax, b in enumerate(axis_orders):
        if b:
            shape = [1] * out.ndim
            shape[ax] = grid.nx
            out = out * grid.xi_1d.reshape(shape) ** b
    return np.fft.ifftn(out, axes=tuple(range(grid.n)))


def fractional_space_norms(gvals, grid, order, p=2):
    """Tangential Sobolev-Slobodetskii seminorm of possibly high order.

    ``order`` splits into integer and fractional parts; the integer
    part is taken spectrally on the torus, the remainder by the
    periodic double-sum seminorm, accumulated over every tangential
    axis.  Integer ``order`` degenerates to the plain derivative norm.
    """
    mu = int(math.floor(order))
    sigma = order - mu
    total = 0.0
    cell = grid.cell
    for beta in multi_indices(grid.n, mu):
        dvals = _tangential_derivative(gvals, grid, beta)
        if sigma == 0.0:
            total += grid.lp_norm(dvals, p) ** p
            continue
        for ax in range(grid.n):
            moved = np.moveaxis(dvals, ax, 0)
            total += slobodetskii_seminorm(
                moved, grid.xs, sigma, p=p,
                cell=cell / (grid.L / grid.nx), period=grid.L) ** p
    return total ** (1.0 / p)


def _sparse_axes(grid, t=None):
    axes = []
    for ax in range(grid.n):
        shape = [1] * (grid.n + 1)
        shape[ax] = grid.nx
        axes.append(grid.xs.reshape(shape))
    shape = [1] * (grid.n + 1)
    shape[-1] = grid.ny
    axes.append(grid.ys.reshape(shape))
    if t is None:
        return axes
    return [t] + axes


def _sample_field(fn, grid, N, args, what):
    vals = np.asarray(fn(*args), dtype=complex)
    target = grid.spatial_shape + (grid.ny, N)
    if vals.shape != target:
        vals = np.broadcast_to(vals, target).copy()
    if not np.all(np.isfinite(vals)):
        raise ArgumentError("%s returned non-finite samples" % what)
    return vals


def _sample_boundary(fn, grid, N, t, what):
    axes = []
    for ax in range(grid.n):
        shape = [1] * grid.n
        shape[ax] = grid.nx
        axes.append(grid.xs.reshape(shape))
    vals = np.asarray(fn(t, *axes), dtype=complex)
    target = grid.spatial_shape + (N,)
    if vals.shape != target:
        vals = np.broadcast_to(vals, target).copy()
    if not np.all(np.isfinite(vals)):
        raise ArgumentError("%s returned non-finite samples" % what)
    return vals


class ParabolicProblem:
    """Initial-boundary value problem data on the half-space ray mesh.

    Parameters
    ----------
    sym : InteriorSymbol
    bspec : BoundaryOperatorSpec
    T : float
        Final time.
    f : callable, optional
        Forcing ``f(t, x..., y) -> (..., N)``.
    g : dict, optional
        Boundary data keyed ``(row, k)`` with rows numbered from 1 as
        in ``bspec.slots()``; each value is ``g(t, x...) -> (..., N)``
        and must take values in the range of its projection.
    u0 : callable, optional
        Initial field ``u0(x..., y) -> (..., N)``.
    p : float
        Time integrability exponent.
    q : float, optional
        Space exponent; defaults to ``p``.  Only ``q == p`` is
        validated by :func:`validate_data`.
    """

    def __init__(self, sym, bspec, T, f=None, g=None, u0=None, p=2,
                 q=None, grid=None):
        bspec.check_against(sym)
        if T <= 0:
            raise ArgumentError("final time must be positive, got %s"
                                % (T,))
        if f is not None and not callable(f):
            raise ArgumentError("forcing must be callable (t, x, y)")
        if u0 is not None and not callable(u0):
            raise ArgumentError("initial field must be callable (x, y)")
        self.sym = sym
        self.bspec = bspec
        self.T = float(T)
        self.f = f
        self.u0 = u0
        self.p = float(p)
        self.q = float(p if q is None else q)
        self.grid = grid if grid is not None else Grid(n=sym.dim - 1)
        if self.grid.n != sym.dim - 1:
            raise ArgumentError("grid has %d tangential axes, symbol "
                                "needs %d" % (self.grid.n, sym.dim - 1))
        self.slot_comps = {(j, k): comp for j, k, comp in bspec.slots()}
        self.g = {}
        g = g or {}
        for key, fn in g.items():
            if key not in self.slot_comps:
                raise ArgumentError("boundary data key %r matches no "
                                    "(row, order) slot" % (key,))
            if not callable(fn):
                raise ArgumentError("boundary data %r must be callable "
                                    "(t, x)" % (key,))
            self.g[key] = fn
        self._check_ranges()

    def _check_ranges(self):
        for key, fn in self.g.items():
            comp = self.slot_comps[key]
            for t in (0.0, 0.5 * self.T, self.T):
                vals = _sample_boundary(fn, self.grid, self.sym.N, t,
                                        "boundary data %r" % (key,))
                defect = vals - vals @ comp.projection.T
                scale = max(float(np.abs(vals).max()), _TINY)
                if np.abs(defect).max() > 1e-8 * scale:
                    raise ArgumentError(
                        "boundary data %r leaves the range of its "
                        "projection at t=%.3g (relative defect %.2e); "
                        "data are rejected, not projected"
                        % (key, t, float(np.abs(defect).max()) / scale))

    def g_hat(self, t):
        """Per-row boundary data at time t, tangentially transformed."""
        N = self.sym.N
        out = {}
        for j in range(len(self.bspec.rows)):
            total = np.zeros(self.grid.spatial_shape + (N,), dtype=complex)
            for key, fn in self.g.items():
                # public slot keys are 1-based, like bspec.slots()
                if key[0] == j + 1:
                    total += _sample_boundary(fn, self.grid, N, t,
                                              "boundary data %r" % (key,))
            out[j] = np.fft.fftn(total, axes=tuple(range(self.grid.n)))
        return out

    def f_hat(self, t):
        if self.f is None:
            return None
        vals = _sample_field(self.f, self.grid, self.sym.N,
                             _sparse_axes(self.grid, t), "forcing")
        return np.fft.fftn(vals, axes=tuple(range(self.grid.n)))

    def u0_samples(self):
        if self.u0 is None:
            return np.zeros(self.grid.spatial_shape + (self.grid.ny,
                                                       self.sym.N),
                            dtype=complex)
        return _sample_field(self.u0, self.grid, self.sym.N,
                             _sparse_axes(self.grid), "initial field")


class DataClassReport:
    """Data-class validation outcome, one entry per boundary slot.

    Attributes
    ----------
    items : dict
        Keyed ``(row, k)``; each entry carries the exact trace
        exponent, the required temporal/spatial orders, the measured
        seminorms and the compatibility outcome string.
    compatible : bool
        No violated compatibility conditions.
    validated : bool
        False when ``q != p`` (mixed-exponent classes are out of
        numerical scope and reported, not checked).
    """

    def __init__(self, items, p, q, compatible, validated, notes):
        self.items = items
        self.p = p
        self.q = q
        self.compatible = compatible
        self.validated = validated
        self.notes = notes

    def to_dict(self):
        return {
            "p": self.p,
            "q": self.q,
            "compatible": self.compatible,
            "validated": self.validated,
            "notes": list(self.notes),
            "items": {"%d,%d" % key: dict(entry)
                      for key, entry in self.items.items()},
        }


def _boundary_row_values(problem, field_hat):
    """Apply every boundary row to a tangentially transformed field.

    ``field_hat`` has shape (spatial..., ny, N); the result maps row
    index to (spatial..., N) values of the row at y = 0.
    """
    grid, sym = problem.grid, problem.sym
    out = {}
    for j, row in enumerate(problem.bspec.rows):
        total = np.zeros(grid.spatial_shape + (sym.N,), dtype=complex)
        for comp in row.components:
            for expo, mat in comp.coeffs.items():
                tang, l = expo[:-1], expo[-1]
                trace = np.tensordot(grid.normal_derivative(l)[0],
                                     field_hat, axes=(0, grid.n))
                vals = trace @ (mat.T * (-1j) ** l)
                for ax, b in enumerate(tang):
                    if b:
                        shape = [1] * vals.ndim
                        shape[ax] = grid.nx
                        vals = vals * grid.xi_1d.reshape(shape) ** b
                total += vals
        out[j] = total
    return out


def validate_data(problem, time_samples=33):
    """Check boundary data against the trace-class requirements.

    Computes the exact trace exponent per slot, measures the discrete
    temporal and tangential fractional seminorms of the data at the
    required orders, and tests the initial-trace compatibility
    condition where the exponent demands one.  Violations are report
    entries; nothing raises and nothing is mutated.
    """
    sym, grid = problem.sym, problem.grid
    m, p = sym.m, problem.p
    tvals = np.linspace(0.0, problem.T, time_samples)
    notes = []
    validated = problem.q == problem.p
    if not validated:
        notes.append("q != p: mixed-exponent data classes are not "
                     "validated numerically")

    u0_hat = np.fft.fftn(problem.u0_samples(),
                         axes=tuple(range(grid.n)))
    row_traces = _boundary_row_values(problem, u0_hat)

    items = {}
    compatible = True
    for key, comp in sorted(problem.slot_comps.items()):
        j, k = key
        kappa = kappa_exponent(m, k, p)
        kf = float(kappa)
        entry = {
            "kappa": kappa,
            "kappa_float": kf,
            "time_order": kf,
            "space_order": 2 * m * kf,
        }
        fn = problem.g.get(key)
        if fn is None:
            samples = np.zeros((time_samples,) + grid.spatial_shape
                               + (sym.N,), dtype=complex)
        else:
            samples = np.stack([
                _sample_boundary(fn, grid, sym.N, t,
                                 "boundary data %r" % (key,))
                for t in tvals])
        entry["sup"] = float(np.abs(samples).max())
        entry["seminorm_time"] = slobodetskii_seminorm(
            samples, tvals, kf, p=p, cell=grid.cell)
        space_total = 0.0
        wts = quadrature_weights(tvals)
        for it, t in enumerate(tvals):
            space_total += wts[it] * fractional_space_norms(
                samples[it], grid, 2 * m * kf, p=p) ** p
        entry["seminorm_space"] = space_total ** (1.0 / p)

        if kappa <= Fraction(1) / Fraction(problem.p):
            entry["compat"] = "skipped (kappa <= 1/p)"
        else:
            # the row value of u0 restricted to this slot's range
            # (row_traces is positional, slot keys count rows from 1)
            trace = np.fft.ifftn(row_traces[j - 1],
                                 axes=tuple(range(grid.n)))
            trace = trace @ comp.projection.T
            g0 = samples[0] @ comp.projection.T
            scale = max(float(np.abs(g0).max()),
                        float(np.abs(trace).max()), 1.0)
            defect = float(np.abs(trace - g0).max()) / scale
            if defect <= TOL_COMPAT:
                entry["compat"] = "ok (defect %.2e)" % defect
            else:
                entry["compat"] = "violated (defect %.2e)" % defect
                compatible = False
        items[key] = entry
    return DataClassReport(items, problem.p, problem.q, compatible,
                           validated, notes)


class SolutionHistory:
    """Space-time solution values on the step grid.

    ``values`` has shape (steps+1, spatial..., ny, N) in physical
    tangential coordinates; ``times`` is the matching step grid.
    """

    def __init__(self, problem, times, values):
        self.problem = problem
        self.grid = problem.grid
        self.times = times
        self.values = values

    def time_derivative(self):
        """Second-order difference quotient in time, same shape."""
        dt = self.times[1] - self.times[0]
        out = np.empty_like(self.values)
        out[1:-1] = (self.values[2:] - self.values[:-2]) / (2.0 * dt)
        out[0] = (-1.5 * self.values[0] + 2.0 * self.values[1]
                  - 0.5 * self.values[2]) / dt
        out[-1] = (1.5 * self.values[-1] - 2.0 * self.values[-2]
                   + 0.5 * self.values[-3]) / dt
        return out

    def spatial_derivative(self, alpha):
        """Apply ``D^alpha`` to every stored time slice."""
        grid = self.grid
        if len(alpha) != grid.n + 1:
            raise ArgumentError("derivative index needs %d entries, got %r"
                                % (grid.n + 1, alpha))
        hat = np.fft.fftn(self.values, axes=tuple(range(1, grid.n + 1)))
        for ax, b in enumerate(alpha[:-1]):
            if b:
                shape = [1] * hat.ndim
                shape[1 + ax] = grid.nx
                hat = hat * grid.xi_1d.reshape(shape) ** b
        gamma = alpha[-1]
        if gamma:
            mat = grid.normal_derivative(gamma) * (-1j) ** gamma
            hat = np.einsum("ij,...jk->...ik", mat, hat)
        return np.fft.ifftn(hat, axes=tuple(range(1, grid.n + 1)))

    def lp_spacetime(self, field, p=2, time_slice=slice(None)):
        """Space-time p-norm of a (steps+1, ...) field."""
        times = self.times[time_slice]
        field = field[time_slice]
        wts = quadrature_weights(times)
        slices = np.array([self.grid.lp_norm(field[i], p) ** p
                           for i in range(len(times))])
        return float((slices * wts).sum() ** (1.0 / p))

    def sup_error(self, reference):
        """Sup distance to ``reference(t, x..., y)`` over the history."""
        worst = 0.0
        for i, t in enumerate(self.times):
            ref = _sample_field(reference, self.grid,
                                self.problem.sym.N,
                                _sparse_axes(self.grid, t), "reference")
            worst = max(worst, float(np.abs(self.values[i] - ref).max()))
        return worst


def _frequency_operator(sym, grid, xi):
    """Collocated interior operator at one tangential frequency."""
    N = sym.N
    size = grid.ny * N
    L = np.zeros((size, size), dtype=complex)
    for expo, mat in sym.coeffs.items():
        tang, l = expo[:-1], expo[-1]
        scalar = complex(np.prod([x ** b for x, b in zip(xi, tang)])) \
            * (-1j) ** l
        if scalar == 0.0:
            continue
        Dl = grid.normal_derivative(l) if l else np.eye(grid.ny)
        L += scalar * np.kron(Dl, mat)
    return L


def _boundary_rows_matrix(problem, xi):
    """Stacked replaced rows ((m rows) x N, ny*N) at one frequency."""
    grid, sym = problem.grid, problem.sym
    N = sym.N
    blocks = []
    for row in problem.bspec.rows:
        R = np.zeros((N, grid.ny * N), dtype=complex)
        for comp in row.components:
            for expo, mat in comp.coeffs.items():
                tang, l = expo[:-1], expo[-1]
                scalar = complex(np.prod([x ** b
                                          for x, b in zip(xi, tang)])) \
                    * (-1j) ** l
                if scalar == 0.0:
                    continue
                Dl0 = grid.normal_derivative(l)[0] if l \
                    else np.eye(grid.ny)[0]
                R += scalar * np.kron(Dl0[None, :], mat)
        blocks.append(R)
    return blocks


def solve_parabolic(problem, nt=64, check=True, validate=True,
                    override=False, ls_gate=True):
    """Advance the problem to its final time by the two-stage scheme.

    Per tangential frequency the normal collocation system
    ``du/dt + L u = f`` is solved with boundary rows replacing the
    first collocation equations at every implicit stage and decay
    closure (``u = 0``) replacing the last ones.  The scheme is the
    stiffly accurate two-stage diagonally implicit rule with diagonal
    ``1 - 1/sqrt(2)``: L-stable and second order, so stiffness from
    the 2m-th order operator costs nothing beyond one LU
    factorization per frequency.

    Parameters
    ----------
    problem : ParabolicProblem
    nt : int
        Number of time steps.
    check : bool
        Verify boundary reproduction and the interior PDE residual on
        the stored history.
    validate : bool
        Run :func:`validate_data` first and refuse incompatible data
        unless ``override`` is set.
    ls_gate : bool
        Run a coarse boundary-solvability sweep before stepping.

    Raises
    ------
    AssumptionError
        Ellipticity angle at or above pi/2, failed solvability gate,
        incompatible data without override, or a singular stage solve
        (named by frequency and stage).
    """
    sym, grid = problem.sym, problem.grid
    if nt < 3:
        raise ArgumentError("need at least 3 time steps, got %d" % nt)
    rep = ellipticity_angle(sym, 256)
    if not rep.elliptic or rep.angle >= np.pi / 2:
        raise AssumptionError(
            "time stepping needs an ellipticity angle below pi/2, got "
            "%.4f" % rep.angle)
    if ls_gate:
        verdict = ls_sweep(sym, problem.bspec, np.pi / 2, grid=(8, 6, 5))
        if not verdict.passes:
            raise AssumptionError("boundary solvability gate failed: %s"
                                  % verdict.failure)
    if validate:
        report = validate_data(problem, time_samples=9)
        if not report.compatible and not override:
            bad = [key for key, entry in report.items.items()
                   if entry["compat"].startswith("violated")]
            raise AssumptionError(
                "initial trace incompatible with boundary data at slots "
                "%s; pass override=True to step anyway" % (bad,))

    N = sym.N
    m = sym.m
    ny = grid.ny
    dt = problem.T / nt
    times = np.linspace(0.0, problem.T, nt + 1)

    # index rows replaced in every stage system
    repl_rows = []
    for j in range(m):
        repl_rows.extend(range(j * N, (j + 1) * N))
    closure_rows = list(range((ny - m) * N, ny * N))

    factors = []
    rows_per_freq = []
    eye = np.eye(ny * N)
    for idx, xi in grid.xi_vectors():
        L = _frequency_operator(sym, grid, xi)
        M = eye + (_GAMMA * dt) * L
        rows = _boundary_rows_matrix(problem, xi)
        for j, R in enumerate(rows):
            M[j * N:(j + 1) * N] = R
        M[closure_rows] = eye[closure_rows]
        try:
            lu = scipy.linalg.lu_factor(M)
        except (ValueError, scipy.linalg.LinAlgError) as exc:
            raise AssumptionError(
                "stage matrix factorization failed at frequency %r: %s"
                % (idx, exc))
        diag = np.abs(np.diag(lu[0]))
        if diag.min() <= 1e-14 * max(diag.max(), _TINY):
            raise AssumptionError(
                "stage matrix is singular at frequency %r (pivot ratio "
                "%.2e)" % (idx, diag.min() / max(diag.max(), _TINY)))
        factors.append((idx, lu, L))
        rows_per_freq.append(rows)

    u_hat = np.fft.fftn(problem.u0_samples(),
                        axes=tuple(range(grid.n)))
    history = np.empty((nt + 1,) + grid.spatial_shape + (ny, N),
                       dtype=complex)
    history[0] = u_hat

    def stage_rhs(base, f_hat, g_rows, idx):
        rhs = base.copy()
        if f_hat is not None:
            rhs += (_GAMMA * dt) * f_hat[idx].reshape(-1)
        for j in range(m):
            rhs[j * N:(j + 1) * N] = g_rows[j][idx]
        rhs[closure_rows] = 0.0
        return rhs

    for step in range(nt):
        t1 = times[step] + _GAMMA * dt
        t2 = times[step + 1]
        f1, f2 = problem.f_hat(t1), problem.f_hat(t2)
        g1, g2 = problem.g_hat(t1), problem.g_hat(t2)
        new = np.empty_like(u_hat)
        for (idx, lu, L), rows in zip(factors, rows_per_freq):
            un = history[step][idx].reshape(-1)
            U1 = scipy.linalg.lu_solve(lu, stage_rhs(un, f1, g1, idx))
            K1 = (U1 - un) / (_GAMMA * dt)
            base = un + dt * (1.0 - _GAMMA) * K1
            U2 = scipy.linalg.lu_solve(lu, stage_rhs(base, f2, g2, idx))
            if not np.all(np.isfinite(U2)):
                raise AssumptionError(
                    "stage solve produced non-finite values at frequency "
                    "%r, time step %d" % (idx, step))
            new[idx] = U2.reshape(ny, N)
        history[step + 1] = new
        u_hat = new

    values = np.fft.ifftn(history, axes=tuple(range(1, grid.n + 1)))
    sol = SolutionHistory(problem, times, values)
    if check:
        _check_history(problem, history, sol, factors, rows_per_freq)
    return sol


def _check_history(problem, history, sol, factors, rows_per_freq):
    grid, sym = problem.grid, problem.sym
    N, m = sym.N, sym.m
    # boundary rows were collocated at the step times; verify they
    # reproduce the data there
    worst_bc = 0.0
    for step in (1, len(sol.times) // 2, len(sol.times) - 1):
        g_rows = problem.g_hat(sol.times[step])
        scale = max(float(np.abs(history[step]).max()),
                    max((float(np.abs(v).max()) for v in g_rows.values()),
                        default=0.0), _TINY)
        for (idx, _, _), rows in zip(factors, rows_per_freq):
            state = history[step][idx].reshape(-1)
            for j, R in enumerate(rows):
                defect = np.abs(R @ state - g_rows[j][idx]).max()
                worst_bc = max(worst_bc, float(defect) / scale)
    if worst_bc > TOL_BC:
        raise ConsistencyError(
            "boundary rows reproduce data to %.2e, above %.0e"
            % (worst_bc, TOL_BC))

    # interior-band PDE residual, central in time.  The band excludes
    # the boundary layer where the replaced stage rows reduce the
    # scheme's local order; the scale is global across the frequency
    # lattice (a per-frequency scale would grade pure-roundoff modes
    # against themselves).
    dt = sol.times[1] - sol.times[0]
    nt = len(sol.times) - 1
    band = grid.interior_band()
    steps = sorted({max(1, nt // 4), nt // 2, nt - 1})
    worst_pde = 0.0
    for step in steps:
        f_hat = problem.f_hat(sol.times[step])
        du = (history[step + 1] - history[step - 1]) / (2.0 * dt)
        scale = _TINY
        resids = []
        for (idx, _, L) in factors:
            du_part = du[idx].reshape(-1)
            op_part = L @ history[step][idx].reshape(-1)
            resid = du_part + op_part
            scale = max(scale, float(np.abs(du_part).max()),
                        float(np.abs(op_part).max()))
            if f_hat is not None:
                f_part = f_hat[idx].reshape(-1)
                resid -= f_part
                scale = max(scale, float(np.abs(f_part).max()))
            resids.append(np.abs(resid.reshape(grid.ny, N)[band]).max())
        worst_pde = max(worst_pde, float(max(resids)) / scale)
    if worst_pde > TOL_PDE:
        raise ConsistencyError(
            "interior residual %.2e exceeds tolerance %.0e"
            % (worst_pde, TOL_PDE))


def _mr_random_data(rng, problem_args, trial):
    """Admissible random data: boundary windows vanish at t = 0."""
    sym, bspec, T, grid = problem_args
    N = sym.N
    kscale = 2.0 * np.pi / grid.L

    def window(t):
        s = np.asarray(t) / T
        return (s ** 2) * np.exp(-3.0 * s)

    g = {}
    for j, row in enumerate(bspec.rows, start=1):
        for comp in row.components:
            vecs = comp.projection @ (
                rng.standard_normal((3, N)) + 1j
                * rng.standard_normal((3, N))).T
            freqs = rng.integers(-2, 3, size=3)
            phases = rng.uniform(0.0, 2.0 * np.pi, size=3)

            def gfun(t, *xs, vecs=vecs, freqs=freqs, phases=phases):
                out = 0.0
                for i in range(3):
                    mode = np.exp(1j * (kscale * freqs[i] * xs[0]
                                        + phases[i]))
                    out = out + np.asarray(mode)[..., None] * vecs[:, i]
                return np.asarray(window(t))[..., None] * out \
                    if np.ndim(t) else window(t) * out

            g[(j, comp.k)] = gfun

    amp = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    freq = int(rng.integers(-2, 3))
    t0, y0 = 0.35 * T, grid.Y / 6.0

    def f(t, *axes):
        xs, y = axes[:-1], axes[-1]
        bump = np.exp(-((t - t0) / (0.25 * T)) ** 2
                      - ((y - y0) / (grid.Y / 8.0)) ** 2)
        mode = np.exp(1j * kscale * freq * xs[0])
        return (bump * mode)[..., None] * amp

    return f, g, None


def _mr_incompatible_data(rng, problem_args, trial):
    """Initial field whose boundary trace contradicts zero data."""
    sym, bspec, T, grid = problem_args
    N = sym.N
    vec = None
    for row in bspec.rows:
        for comp in row.components:
            if comp.k == 0:
                idx = np.argmax(np.linalg.norm(comp.projection, axis=1))
                vec = comp.projection[idx]
                vec = vec / np.linalg.norm(vec)
                break
        if vec is not None:
            break
    if vec is None:
        raise ArgumentError(
            "incompatible-data control needs a zero-order boundary slot "
            "whose trace exponent exceeds 1/p")

    def u0(*axes):
        y = axes[-1]
        profile = np.exp(-((np.asarray(y)) / (grid.Y / 4.0)) ** 2)
        return profile[..., None] * vec

    return None, {}, u0


def mr_ratio_harness(sym, bspec, trials=3, resolutions=(32, 64),
                     grid=None, T=1.0, p=2, seed=0, incompatible=False,
                     data_factory=None):
    """Regularity-to-data ratio of random solves under time refinement.

    For each resolution the maximal ratio

    .. math:: \\frac{\\|\\partial_t u\\| + \\sum_{|\\alpha| = 2m}
              \\|D^\\alpha u\\|}{\\|f\\| + \\sum \\text{data norms}}

    over random admissible draws is recorded; a uniform-in-time
    regularity constant shows as growth below 30% from the coarsest to
    the finest step count.  With ``incompatible=True`` the data
    violate the initial-trace condition instead, and the harness
    passes when the ratio blows up by at least a factor 3 across the
    resolution span (the refinement then resolves the singular layer
    rather than converging).

    Returns
    -------
    dict
        ``ratios`` per resolution, ``growth`` (last over first),
        ``passed``, ``records``, ``skipped``.
    """
    if grid is None:
        grid = Grid(n=sym.dim - 1, nx=8, ny=32, Y=8.0)
    if len(resolutions) < 2:
        raise ArgumentError("need at least two resolutions to measure "
                            "growth")
    factory = data_factory
    if factory is None:
        factory = _mr_incompatible_data if incompatible \
            else _mr_random_data
    problem_args = (sym, bspec, T, grid)
    m2 = 2 * sym.m

    ratios = {}
    records = []
    skipped = 0
    for nt in resolutions:
        best = 0.0
        for trial in range(trials):
            rng = np.random.default_rng([seed, trial])
            f, g, u0 = factory(rng, problem_args, trial)
            problem = ParabolicProblem(sym, bspec, T, f=f, g=g, u0=u0,
                                       p=p, grid=grid)
            sol = solve_parabolic(problem, nt=nt, check=False,
                                  validate=False, ls_gate=False)
            interior = slice(1, -1)
            numer = sol.lp_spacetime(sol.time_derivative(), p,
                                     interior)
            for alpha in multi_indices(grid.n + 1, m2):
                numer += sol.lp_spacetime(sol.spatial_derivative(alpha),
                                          p, interior)

            denom = 0.0
            if f is not None:
                fvals = np.stack([
                    _sample_field(f, grid, sym.N,
                                  _sparse_axes(grid, t), "forcing")
                    for t in sol.times])
                denom += sol.lp_spacetime(fvals, p, interior)
            report = validate_data(problem, time_samples=min(nt + 1, 33))
            for entry in report.items.values():
                denom += entry["seminorm_time"] + entry["seminorm_space"]
            if u0 is not None:
                u0vals = problem.u0_samples()
                denom += grid.lp_norm(u0vals, p)
                for alpha in multi_indices(grid.n + 1, m2):
                    hat = np.fft.fftn(u0vals,
                                      axes=tuple(range(grid.n)))
                    for ax, b in enumerate(alpha[:-1]):
                        if b:
                            shape = [1] * hat.ndim
                            shape[ax] = grid.nx
                            hat = hat * grid.xi_1d.reshape(shape) ** b
                    gam = alpha[-1]
                    if gam:
                        mat = grid.normal_derivative(gam) * (-1j) ** gam
                        hat = np.einsum("ij,...jk->...ik", mat, hat)
                    denom += grid.lp_norm(
                        np.fft.ifftn(hat, axes=tuple(range(grid.n))), p)
            if denom < 1e-12:
                skipped += 1
                records.append({"nt": nt, "trial": trial,
                                "skipped": True})
                continue
            ratio = numer / denom
            best = max(best, ratio)
            records.append({"nt": nt, "trial": trial, "ratio": ratio,
                            "numerator": numer, "denominator": denom})
        ratios[nt] = best

    first = ratios[resolutions[0]]
    last = ratios[resolutions[-1]]
    growth = last / max(first, _TINY) if first or last else 0.0
    if incompatible:
        passed = growth >= 3.0
    else:
        passed = growth < 1.30
    return {
        "ratios": ratios,
        "growth": float(growth),
        "passed": bool(passed),
        "records": records,
        "skipped": skipped,
    }
