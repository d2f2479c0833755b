"""Unique-solvability checks for the half-line boundary symbol problem.

The boundary problem at scaled frequencies ``(b, sigma)`` asks for the
decaying solution of the interior ODE whose boundary rows reproduce
given data.  Solvability for all admissible ``(b, sigma)`` with
uniformly bounded inverses is decided here two independent ways:

* :func:`build_solution_map` solves the square system on the stable
  subspace of the companion matrix and returns the data-to-trace map;
* :func:`ode_oracle` ignores the companion reduction entirely and works
  from the characteristic polynomial: it finds the decaying exponents
  as polynomial roots, builds elementary solutions from null spaces,
  and fits the boundary data by least squares.

Agreement of the two routes on sweep samples is the strongest internal
check the package offers, and the sweep verdicts power the CLI.
"""

import numpy as np
import scipy.linalg

from ._threads import parallel_map, resolve_threads
from .companion import build_companion, scale_variables, scaled_boundary_row, \
    spectral_split
from .ellipticity import ellipticity_angle
from .errors import ArgumentError, AssumptionError, ConsistencyError
from .symbols import range_basis

__all__ = [
    "KAPPA_MAX",
    "SolutionMap",
    "LSVerdict",
    "OdeSolution",
    "build_solution_map",
    "sweep_points",
    "ls_sweep",
    "ode_oracle",
]

# condition number of the stacked boundary map above which LS is failed
KAPPA_MAX = 1e8
# relative tolerance for data vectors claimed to lie in a projection range
_TAU_DATA = 1e-8


def _slot_bases(bspec):
    """(j, k, component, range basis) for every boundary slot, in order."""
    out = []
    for j, k, comp in bspec.slots():
        out.append((j, k, comp, range_basis(comp.projection)))
    return out


class SolutionMap:
    """Data-to-trace map of the half-line problem at one ``(b, sigma)``.

    The map sends stacked boundary data coordinates to the slot vector
    ``w(0)`` of the decaying solution; the leading ``N`` entries are the
    trace ``v(0)`` and slot ``s`` carries ``rho**-s D_y^s v(0)``.

    Attributes
    ----------
    M : ndarray
        Shape ``(2mN, mN)``.
    cond : float
        Condition number of the stacked boundary matrix that was
        inverted.
    slots : list
        ``(j, k, component, U)`` per data slot; ``U`` holds orthonormal
        columns spanning the projection range, fixing the stacked
        coordinates.
    """

    def __init__(self, M, cond, slots, cs):
        self.M = M
        self.cond = cond
        self.slots = slots
        self.cs = cs

    @property
    def N(self):
        return self.cs.sym.N

    def pack(self, data, rho=None):
        """Stack per-slot data vectors into solver coordinates.

        Parameters
        ----------
        data : dict
            Maps ``(j, k)`` to a vector in the range of that slot's
            projection (or a matrix of such columns).  Missing slots
            mean zero data.  Components outside the projection range
            are rejected, not projected away.
        rho : float, optional
            When given, slot ``(j, k)`` data is divided by ``rho**k``
            so unscaled boundary data can be passed directly.

        Returns
        -------
        ndarray
            Shape ``(mN,)`` or ``(mN, q)``.
        """
        cols = None
        for key, val in data.items():
            arr = np.asarray(val, dtype=complex)
            q = 1 if arr.ndim == 1 else arr.shape[1]
            if cols is None:
                cols = q
            elif cols != q:
                raise ArgumentError("inconsistent data column counts")
        if cols is None:
            cols = 1
        valid = {(j, k) for j, k, _, _ in self.slots}
        unknown = set(data) - valid
        if unknown:
            raise ArgumentError("data for unknown slots %r"
                                % (sorted(unknown),))
        pieces = []
        for j, k, comp, U in self.slots:
            val = data.get((j, k))
            if val is None:
                pieces.append(np.zeros((U.shape[1], cols), dtype=complex))
                continue
            arr = np.asarray(val, dtype=complex).reshape(self.N, cols)
            resid = arr - comp.projection @ arr
            if np.linalg.norm(resid) > _TAU_DATA * max(1.0, np.linalg.norm(arr)):
                raise ArgumentError(
                    "data for slot (%d, %d) leaves the projection range by "
                    "%.2e; data outside the range is rejected, not projected"
                    % (j, k, np.linalg.norm(resid)))
            if rho is not None:
                arr = arr / float(rho) ** k
            pieces.append(U.conj().T @ arr)
        out = np.concatenate(pieces, axis=0)
        return out[:, 0] if cols == 1 and all(
            np.asarray(v).ndim == 1 for v in data.values()) else out

    def trace(self, data, rho=None):
        """Slot vector ``w(0)`` of the solution for the given data."""
        return self.M @ self.pack(data, rho=rho)

    def reproduction_defect(self):
        """Worst relative error of boundary rows applied to unit data.

        For each slot, unit data in that slot alone must be reproduced
        by its own scaled boundary row and annihilated by the others.
        """
        order = self.cs.sym.order
        worst = 0.0
        offset = 0
        mN = self.M.shape[1]
        for j, k, comp, U in self.slots:
            r = U.shape[1]
            rows = U.conj().T @ scaled_boundary_row(comp, self.cs.b, order)
            for idx in range(r):
                e = np.zeros(mN, dtype=complex)
                e[offset + idx] = 1.0
                got = rows @ (self.M @ e)
                want = np.zeros(r, dtype=complex)
                want[idx] = 1.0
                worst = max(worst, float(np.linalg.norm(got - want)))
            offset += r
        return worst


class LSVerdict:
    """Outcome of a solvability sweep over the compact parameter set."""

    def __init__(self, passes, worst_condition_number, worst_point,
                 sweep_size, M_norm_sup, failure=None):
        self.passes = passes
        self.worst_condition_number = worst_condition_number
        self.worst_point = worst_point
        self.sweep_size = sweep_size
        self.M_norm_sup = M_norm_sup
        self.failure = failure

    def to_dict(self):
        lam, xi = self.worst_point if self.worst_point else (None, None)
        return {
            "passes": bool(self.passes),
            "worst_condition_number": float(self.worst_condition_number),
            "worst_lambda": None if lam is None else
                [float(np.real(lam)), float(np.imag(lam))],
            "worst_xi": None if xi is None else
                [float(x) for x in np.real(np.atleast_1d(xi))],
            "sweep_size": int(self.sweep_size),
            "M_norm_sup": float(self.M_norm_sup),
            "failure": self.failure,
        }


def build_solution_map(cs, bspec, split=None):
    """Solve the boundary system on the stable subspace.

    Assembles, for a basis ``Q`` of the stable subspace, the square
    stacked matrix with block rows ``U^H B0_{j,k}(b) Q`` over the data
    slots, and inverts it.  ``P_plus M = 0`` holds by construction
    because every column of ``M = Q S^{-1}`` lies in the stable range.

    Raises
    ------
    AssumptionError
        When the stacked matrix is rank deficient or has condition
        number above ``KAPPA_MAX``: unique solvability fails at this
        ``(b, sigma)``.
    """
    sym = cs.sym
    bspec.check_against(sym)
    if split is None:
        split = spectral_split(cs)
    Q = split.Q_minus
    mN = Q.shape[1]
    slots = _slot_bases(bspec)
    blocks = []
    for j, k, comp, U in slots:
        row = scaled_boundary_row(comp, cs.b, sym.order)
        blocks.append(U.conj().T @ row @ Q)
    S = np.concatenate(blocks, axis=0)
    if S.shape != (mN, mN):
        raise ArgumentError("stacked boundary matrix has shape %r, expected "
                            "(%d, %d)" % (S.shape, mN, mN))
    cond = float(np.linalg.cond(S))
    if not np.isfinite(cond) or cond > KAPPA_MAX:
        raise AssumptionError(
            "unique solvability fails at b=%r sigma=%r: stacked boundary "
            "matrix is rank deficient (condition number %.3e exceeds %.1e)"
            % (cs.b, cs.sigma, cond, KAPPA_MAX))
    M = Q @ np.linalg.inv(S)
    return SolutionMap(M, cond, slots, cs)


def sweep_points(n, phi, grid=(64, 32, 16)):
    """Deterministic sweep of the admissible compact parameter set.

    Yields ``(b, sigma)`` pairs covering two families: the unit sigma
    arc against the solid tangential ball, and the unit tangential
    sphere against the solid sigma sector.  Homogeneity of the problem
    makes this equivalent to sweeping all ``(lambda, xi')``.

    Parameters
    ----------
    n : int
        Tangential dimension.
    phi : float
        Sector half-width parameter; sigma arguments range over
        ``[-(pi - phi), pi - phi]``.
    grid : tuple
        ``(arc_points, directions, radii)``.  In one tangential
        dimension the directions collapse to ``{+1, -1}``.
    """
    arc_points, direction_count, radius_count = grid
    if arc_points < 2 or direction_count < 1 or radius_count < 2:
        raise ArgumentError("sweep grid too small: %r" % (grid,))
    args = np.linspace(-(np.pi - phi), np.pi - phi, arc_points)
    sigmas_arc = np.exp(1j * args)
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        from .ellipticity import sphere_points
        dirs = sphere_points(n, direction_count)
    radii = np.linspace(0.0, 1.0, radius_count)
    pts = []
    for sigma in sigmas_arc:
        for d in dirs:
            for r in radii:
                pts.append((r * d, complex(sigma)))
    for d in dirs:
        for sigma in sigmas_arc:
            for r in radii[1:]:
                pts.append((1.0 * d, complex(r * sigma)))
    return pts


def ls_sweep(sym, bspec, phi, grid=(64, 32, 16), threads=None):
    """Sweep the compact parameter set and record solvability.

    Parameters
    ----------
    sym : InteriorSymbol
    bspec : BoundaryOperatorSpec
    phi : float
        The spectral parameter is swept over the closed sector of
        half-opening ``pi - phi``; the symbol's ellipticity angle must
        stay strictly below ``pi - phi``.
    grid : tuple
        ``(arc_points, directions, radii)``.
    threads : int or None
        Worker threads; sweep order and aggregation are deterministic
        either way.

    Returns
    -------
    LSVerdict
        Failures are recorded in the verdict, not raised.
    """
    rep = ellipticity_angle(sym, 256)
    if not rep.elliptic or rep.angle >= np.pi - phi:
        raise AssumptionError(
            "ellipticity angle %.6f is not below pi - phi = %.6f"
            % (rep.angle, np.pi - phi))
    try:
        bspec.check_against(sym)
    except ArgumentError as exc:
        return LSVerdict(False, np.inf, None, 0, 0.0,
                         failure="structural: %s" % exc)
    pts = sweep_points(sym.n, phi, grid)

    def probe(point):
        b, sigma = point
        try:
            cs = build_companion(sym, b, sigma)
            smap = build_solution_map(cs, bspec)
            return smap.cond, float(np.linalg.norm(smap.M, 2)), None
        except (AssumptionError, ConsistencyError) as exc:
            return np.inf, np.inf, str(exc)

    results = parallel_map(probe, pts, resolve_threads(threads))
    worst_cond = 0.0
    worst_point = None
    m_sup = 0.0
    failure = None
    for point, (cond, mnorm, err) in zip(pts, results):
        if cond > worst_cond or worst_point is None:
            worst_cond = cond
            worst_point = (point[1], point[0])
        m_sup = max(m_sup, mnorm)
        if err is not None and failure is None:
            b, sigma = point
            failure = "at b=%r sigma=%r: %s" % (b, sigma, err)
    passes = failure is None and worst_cond <= KAPPA_MAX
    if failure is None and worst_cond > KAPPA_MAX:
        failure = "condition number %.3e exceeds %.1e" % (worst_cond,
                                                          KAPPA_MAX)
    return LSVerdict(passes, worst_cond, worst_point, len(pts), m_sup,
                     failure=failure)


class OdeSolution:
    """Decaying solution produced by the characteristic-root oracle.

    Instances are callable: ``sol(y)`` evaluates the profile at the
    given nonnegative points, returning shape ``(N, ny)`` for a single
    dataset and ``(N, ny, q)`` for stacked column datasets.

    Attributes
    ----------
    trace : ndarray
        ``v(0)``, shape ``(N,)`` or ``(N, q)``.
    slots : ndarray
        Scaled slot vector at the boundary; block ``s`` carries
        ``rho**-s D_y^s v(0)``, matching the solution map output.
    residual : float
        Boundary fit residual of the least-squares solve.
    """

    def __init__(self, exponents, amplitudes, coeffs, rho, N, m):
        self.exponents = exponents
        self.amplitudes = amplitudes
        self.coeffs = coeffs
        self.rho = rho
        self.N = N
        self.m = m
        self.residual = 0.0

    def __call__(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        phases = np.exp(1j * self.rho * np.multiply.outer(y, self.exponents))
        if self.coeffs.ndim == 1:
            return self.amplitudes @ (self.coeffs[:, None] * phases.T)
        return np.einsum("yr,rq,nr->nyq", phases, self.coeffs,
                         self.amplitudes)

    @property
    def trace(self):
        """Boundary value ``v(0)``."""
        return self.amplitudes @ self.coeffs

    @property
    def slots(self):
        """Scaled slot vector at the boundary, for solver comparison."""
        count = 2 * self.m
        pows = np.vstack([self.exponents ** s for s in range(count)])
        if self.coeffs.ndim == 1:
            per = pows[:, None, :] * (self.amplitudes
                                      * self.coeffs)[None, :, :]
            return per.sum(axis=2).reshape(-1)
        out = np.einsum("sr,nr,rq->snq", pows, self.amplitudes, self.coeffs)
        return out.reshape(count * self.N, -1)


def ode_oracle(sym, bspec, lam, xi_prime, data):
    """Solve the half-line problem from characteristic roots only.

    This route shares no linear algebra with the companion reduction:
    the characteristic polynomial ``det(sigma I + A(b, eta))`` is
    recovered by interpolation, its upper half-plane roots give the
    decaying exponentials, null spaces give mode amplitudes, and the
    boundary conditions are fitted by least squares.

    Parameters
    ----------
    sym : InteriorSymbol
    bspec : BoundaryOperatorSpec
    lam : complex
    xi_prime : array_like
    data : dict
        ``(j, k)`` to data vector (or matrix of column datasets) in the
        slot projection's range.

    Returns
    -------
    OdeSolution
        With ``trace``, ``slots``, callable profile, and the boundary
        fit ``residual``.

    Raises
    ------
    AssumptionError
        Root count or null-space dimensions inconsistent with unique
        solvability, or boundary fit residual above 1e-7.
    ConsistencyError
        Fitted profile fails to decay.
    """
    sym_order = sym.order
    N = sym.N
    mN = sym.m * N
    rho, b, sigma = scale_variables(lam, xi_prime, sym_order)
    parts = sym.tangential_parts()
    tilde = [parts[l](b.astype(complex)) for l in range(sym_order + 1)]

    def full_symbol(eta):
        return sum(t * eta ** (sym_order - l) for l, t in enumerate(tilde)) \
            + sigma * np.eye(N)

    deg = sym_order * N
    nodes = 2.0 * np.exp(2j * np.pi * np.arange(deg + 1) / (deg + 1))
    values = np.array([np.linalg.det(full_symbol(e)) for e in nodes])
    coeffs = np.polyfit(nodes, values, deg)
    roots = np.roots(coeffs)
    up = roots[roots.imag > 1e-8]
    if len(up) != mN:
        raise AssumptionError(
            "expected %d decaying characteristic roots, found %d at "
            "lambda=%r xi'=%r" % (mN, len(up), lam, xi_prime))
    up = up[np.lexsort((up.real, up.imag))]
    # cluster nearby roots so multiple roots share one null-space solve
    clusters = []
    for eta in up:
        if clusters and abs(eta - clusters[-1][0]) <= 1e-6 * max(1.0, abs(eta)):
            centre, count = clusters[-1]
            clusters[-1] = ((centre * count + eta) / (count + 1), count + 1)
        else:
            clusters.append((eta, 1))
    exponents = []
    amplitudes = []
    for centre, count in clusters:
        mat = full_symbol(centre)
        _, sv, vh = np.linalg.svd(mat)
        if count > 1 and sv[-count] > 1e-4 * max(sv[0], 1.0):
            raise AssumptionError(
                "characteristic root at %r has multiplicity %d but the "
                "symbol null space is smaller; non-semisimple mode "
                "structure is unsupported" % (centre, count))
        for i in range(count):
            exponents.append(centre)
            amplitudes.append(vh[-(i + 1)].conj())
    exponents = np.array(exponents)
    amplitudes = np.array(amplitudes).T  # (N, mN) columns are modes
    # boundary fit: rows are projected boundary symbols applied to modes
    slots = _slot_bases(bspec)
    xi = np.asarray(xi_prime, dtype=float).reshape(-1)
    rows = []
    rhs = []
    q = None
    for j, k, comp, U in slots:
        r = U.shape[1]
        block = np.zeros((r, len(exponents)), dtype=complex)
        for ridx, (eta, w) in enumerate(zip(exponents, amplitudes.T)):
            xi_full = np.concatenate([xi.astype(complex), [rho * eta]])
            block[:, ridx] = U.conj().T @ (comp.eval(xi_full) @ w)
        rows.append(block)
        val = data.get((j, k))
        if val is None:
            val = np.zeros(N, dtype=complex)
        arr = np.asarray(val, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, None]
        if q is None:
            q = arr.shape[1]
        elif arr.shape[1] != q:
            raise ArgumentError("inconsistent data column counts")
        resid = arr - comp.projection @ arr
        if np.linalg.norm(resid) > _TAU_DATA * max(1.0, np.linalg.norm(arr)):
            raise ArgumentError("data for slot (%d, %d) leaves the "
                                "projection range" % (j, k))
        rhs.append(U.conj().T @ arr)
    F = np.concatenate(rows, axis=0)
    G = np.concatenate(rhs, axis=0)
    if q is None:
        q = 1
        G = np.zeros((F.shape[0], 1), dtype=complex)
    coeff, *_ = np.linalg.lstsq(F, G, rcond=None)
    fit_resid = float(np.linalg.norm(F @ coeff - G))
    if fit_resid > 1e-7 * max(1.0, float(np.linalg.norm(G))):
        raise AssumptionError(
            "boundary data fit residual %.3e; unique solvability is "
            "doubtful at lambda=%r xi'=%r" % (fit_resid, lam, xi_prime))
    single = all(np.asarray(v).ndim == 1 for v in data.values()) and data
    out_coeff = coeff[:, 0] if (single or not data) and q == 1 else coeff
    sol = OdeSolution(exponents, amplitudes, out_coeff, rho, N, sym.m)
    sol.residual = fit_resid
    # decay sanity: all selected exponents have positive imaginary part,
    # so the profile at a few e-foldings must sit well below its modes
    y_star = 3.0 / (rho * float(exponents.imag.min()))
    cap = np.exp(-2.9) * float(
        np.sum(np.abs(np.atleast_2d(out_coeff.T))
               * np.linalg.norm(amplitudes, axis=0)))
    val = float(np.linalg.norm(sol(np.array([y_star]))))
    if val > cap + 1e-12:
        raise ConsistencyError("oracle profile fails to decay: |v(%g)| = %.3e"
                               % (y_star, val))
    return sol
