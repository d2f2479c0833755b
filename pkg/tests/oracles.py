"""Independent computation routes behind the derived test expectations.

Every helper here recomputes a quantity by a path that shares no code
with the library: hand-derived closed forms, explicit 2x2 linear
algebra, dense finite differences, series summation, or elementary
quadrature of an integrand written out from scratch.  Frozen constants
in the test modules were produced by these oracles; the tests either
compare library output against the frozen number or call the oracle
directly at runtime.
"""

import cmath
import math
from fractions import Fraction

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special


# ---------------------------------------------------------------------------
# ellipticity


def matrix_angle(mat):
    """Largest eigenvalue argument of a constant coefficient matrix.

    For a symbol ``M |xi|^(2m)`` the spectrum at every frequency is the
    spectrum of ``M`` scaled by the positive number ``|xi|^(2m)``, so
    the spectral angle of the whole symbol equals the maximal
    ``|arg eig(M)|``.
    """
    eigs = np.linalg.eigvals(np.atleast_2d(np.asarray(mat, dtype=complex)))
    return float(np.abs(np.angle(eigs)).max())


def perturbed_heat_angle(eps):
    """Exact perturbed spectral angle of the scalar second-order symbol.

    ``A(xi + i eta) = |xi|^2 - |eta|^2 + 2i xi.eta`` for real vectors,
    so with ``|xi| = 1`` and ``|eta| = r <= eps`` the argument is
    maximal for parallel vectors: ``atan2(2r, 1 - r^2) = 2 atan(r)``,
    increasing in ``r``.  The supremum over the perturbation ball is
    therefore ``2 atan(eps)``.
    """
    return 2.0 * math.atan(eps)


# ---------------------------------------------------------------------------
# tangential splitting


def tangential_split_by_fit(eval_fn, order, xi_prime):
    """Recover normal-degree coefficient matrices by polynomial fitting.

    Samples ``A(xi', eta)`` at ``order + 1`` real nodes ``eta`` and
    solves the Vandermonde system per matrix entry.  Entry ``l`` of the
    returned list multiplies ``eta**(order - l)``, matching the
    convention of the library's splitter while sharing none of its
    bookkeeping.
    """
    xi_prime = np.atleast_1d(np.asarray(xi_prime, dtype=complex))
    etas = np.linspace(-2.0, 2.0, order + 1)
    samples = np.stack([
        np.atleast_2d(eval_fn(np.concatenate([xi_prime, [eta]])))
        for eta in etas])
    V = np.vander(etas, order + 1)  # columns eta^order .. eta^0
    flat = samples.reshape(order + 1, -1)
    coeff = np.linalg.solve(V, flat)
    N = samples.shape[1]
    return [coeff[l].reshape(N, N) for l in range(order + 1)]


# ---------------------------------------------------------------------------
# companion reduction, second order scalar case


def heat_companion(b, sigma):
    """Hand first-order reduction of ``sigma v + (b^2 + eta^2) v = 0``.

    With slots ``w = (v, D_y v)`` the relation ``eta^2 = -(sigma + b^2)``
    on solutions gives ``D_y w = A0 w`` in symbol form with

        ``A0 = [[0, 1], [-(sigma + b^2), 0]]``.
    """
    b = complex(np.atleast_1d(b)[0])
    return np.array([[0.0, 1.0], [-(complex(sigma) + b * b), 0.0]],
                    dtype=complex)


def heat_decay_rate(b, sigma):
    """Principal root ``s = sqrt(sigma + b^2)``; ``Re s > 0`` off the cut.

    The eigenvalues of ``i A0`` are ``-s`` (decaying mode) and ``+s``.
    """
    b = complex(np.atleast_1d(b)[0])
    return cmath.sqrt(complex(sigma) + b * b)


def heat_stable_projection(b, sigma):
    """2x2 spectral projection onto the decaying mode, via the dual basis.

    ``i A0`` has eigenpairs ``(-s, (1, i s))`` and ``(+s, (1, -i s))``.
    Stacking the eigenvectors as columns of ``V``, the projection onto
    the first along the second is ``V e1 e1^T V^{-1}``; the inverse of
    the 2x2 is written out, so the only floating work is one outer
    product.
    """
    s = heat_decay_rate(b, sigma)
    col = np.array([1.0, 1j * s], dtype=complex)
    # first row of V^{-1} for V = [[1, 1], [i s, -i s]], det = -2 i s
    row = np.array([0.5, -0.5j / s], dtype=complex)
    return np.outer(col, row)


def dirichlet_halfline(lam, xi, g, ys):
    """Closed-form decaying solution with value data at the boundary.

    ``lam v + (xi^2 - d_yy) v = 0`` with ``v -> 0`` forces
    ``v = c exp(-s y)``, ``s = sqrt(lam + xi^2)``; the value row gives
    ``c = g``.
    """
    s = cmath.sqrt(complex(lam) + float(xi) ** 2)
    return g * np.exp(-s * np.asarray(ys, dtype=float))


def neumann_halfline(lam, xi, g, ys):
    """Closed-form solution for the inward-derivative row ``1j D_y``.

    On ``v = c exp(-s y)`` the row evaluates to ``v'(0) = -s c``
    (since ``1j D_y = d/dy``), so ``c = -g / s``; at ``lam = 1``,
    ``xi = 0`` the profile is ``-g exp(-y)``.
    """
    s = cmath.sqrt(complex(lam) + float(xi) ** 2)
    return -(g / s) * np.exp(-s * np.asarray(ys, dtype=float))


# ---------------------------------------------------------------------------
# coupled fixture rows


def coupling_matrices(alpha, flux_rows):
    """Value/flux projections and the rebased flux coefficient matrix.

    ``T`` stacks the value functional over the flux functionals;
    ``w = T^{-1} e1`` spans the common kernel of the fluxes and is
    normalized against ``alpha`` automatically (``alpha . w = 1`` is
    the first entry of ``T w = e1``).  Everything is a direct solve,
    independent of the fixture builders.
    """
    alpha = np.asarray(alpha, dtype=float)
    rows = [np.asarray(r, dtype=float) for r in flux_rows]
    N = alpha.size
    T = np.vstack([alpha] + rows)
    w = np.linalg.solve(T, np.eye(N)[:, 0])
    P0 = np.outer(w, alpha)
    P1 = np.eye(N) - P0
    C = np.linalg.solve(T, np.vstack([np.zeros((1, N))] + rows))
    return T, P0, P1, C


def catalysis_boundary_matrix(lam, xi, d, alpha, beta, gamma):
    """Direct boundary matrix of the coupled three-component fixture.

    Each component decays like ``exp(-s_c y)`` with
    ``s_c = sqrt(lam / d_c + xi^2)`` (the diagonal interior decouples),
    so the boundary row applied to the basis mode ``e_c exp(-s_c y)``
    is ``(P0 - s_c C P1) e_c``; the fixture's flux coefficient is
    ``1j C`` acting on ``D_y v(0) = i s_c e_c``.  Unique solvability at
    ``(lam, xi)`` is invertibility of the stacked 3x3.
    """
    d = np.asarray(d, dtype=float)
    _, P0, P1, C = coupling_matrices(alpha, [beta, gamma])
    cols = []
    for c in range(3):
        s = cmath.sqrt(complex(lam) / d[c] + float(xi) ** 2)
        e = np.eye(3)[:, c]
        cols.append(P0 @ e - s * (C @ (P1 @ e)))
    return np.stack(cols, axis=1)


def catalysis_ls_margin(lam, xi, d, alpha, beta, gamma):
    """Column-normalized determinant modulus of the boundary matrix."""
    B = catalysis_boundary_matrix(lam, xi, d, alpha, beta, gamma)
    norms = np.linalg.norm(B, axis=0)
    return abs(np.linalg.det(B / norms))


# ---------------------------------------------------------------------------
# fullspace / halfspace solves


def fd_fullline_solve(lam, xisq, f_fn, y_lo, y_hi, npts):
    """Dense second-order two-point solve of ``(lam + xisq) u - u'' = f``.

    Zero values are imposed at both ends; with the forcing supported
    well inside the window, the artificial ends sit in the
    exponentially small solution tail.  Tridiagonal banded solve, one
    Richardson step (h and h/2) for fourth-order accuracy.

    Returns ``(ys, u)`` on the coarse interior nodes.
    """
    def solve_at(n):
        ys = np.linspace(y_lo, y_hi, n + 1)
        h = ys[1] - ys[0]
        inner = ys[1:-1]
        f = np.asarray(f_fn(inner), dtype=complex)
        ab = np.zeros((3, n - 1), dtype=complex)
        ab[0, 1:] = -1.0 / h ** 2
        ab[1, :] = complex(lam) + float(xisq) + 2.0 / h ** 2
        ab[2, :-1] = -1.0 / h ** 2
        u = scipy.linalg.solve_banded((1, 1), ab, f)
        full = np.zeros(n + 1, dtype=complex)
        full[1:-1] = u
        return ys, full

    ys, coarse = solve_at(npts)
    _, fine = solve_at(2 * npts)
    extrap = (4.0 * fine[::2] - coarse) / 3.0
    return ys, extrap


def trace_series_solution(a, lam, xs, ys, kmax=200):
    """Exact boundary-driven solution for the data ``1 / (a - cos x)``.

    The data has geometric Fourier coefficients
    ``r^{|k|} / sqrt(a^2 - 1)`` with ``r = a - sqrt(a^2 - 1)`` (the
    classical generating function of ``r^{|k|}``), and each mode decays
    as ``exp(-sqrt(lam + k^2) y)``; the truncated series is exact to
    ``r^kmax``.
    """
    root = math.sqrt(a * a - 1.0)
    r = a - root
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = np.zeros((xs.size, ys.size), dtype=complex)
    for k in range(-kmax, kmax + 1):
        ghat = r ** abs(k) / root
        s = cmath.sqrt(complex(lam) + k * k)
        out += ghat * np.exp(1j * k * xs)[:, None] \
            * np.exp(-s * ys)[None, :]
    return out


def single_mode_extension(lam, kmode, order, xs, ys):
    """Closed form of the damped extension of one tangential mode.

    ``exp(i k x) exp(-(|lam| + |k|^order)^(1/order) y)``.
    """
    mu = (abs(lam) + abs(float(kmode)) ** order) ** (1.0 / order)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    return np.exp(1j * kmode * xs)[:, None] * np.exp(-mu * ys)[None, :]


def manufactured_heat(lam):
    """Elliptic manufactured fields for the scalar value-row problem.

    ``u*(x, y) = exp(-y) cos(x)`` is harmonic, so the second-order
    interior operator contributes nothing and ``f = lam u*``; the value
    data is ``cos(x)``.  Returns callables shaped for the solver
    (trailing component axis).
    """
    def u_star(x, y):
        return (np.exp(-np.asarray(y)) * np.cos(np.asarray(x)))[..., None]

    def f(x, y):
        return lam * u_star(x, y)

    def g(x):
        return np.cos(np.asarray(x))[..., None]

    return u_star, f, g


def manufactured_catalysis(lam, d=(1.0, 2.0, 3.0), alpha=(1.0, 1.0, 1.0),
                           beta=(1.0, -2.0, 0.0), gamma=(1.0, 0.0, 3.0)):
    """Manufactured fields for the coupled three-component fixture.

    Component profiles ``exp(-a_c y) cos(x)`` with rates ``a = (1, 2, 1)``
    give ``(-Lap) u_c = (1 - a_c^2) u_c``, so the forcing is
    ``(lam + d_c (1 - a_c^2)) u_c``.  The boundary data follow from
    applying the rows to ``u*``: the value slot carries ``P0 u*(x, 0)``
    and the flux slot ``1j C P1 (D_y u*)(x, 0) = -C P1 (a * u*(x, 0))``.
    """
    d = np.asarray(d, dtype=float)
    rates = np.array([1.0, 2.0, 1.0])
    _, P0, P1, C = coupling_matrices(alpha, [beta, gamma])

    def u_star(x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        prof = np.exp(-np.multiply.outer(y, rates))
        return prof * np.cos(x)[..., None]

    scale = lam + d * (1.0 - rates ** 2)

    def f(x, y):
        return u_star(x, y) * scale

    g0_vec = P0 @ np.ones(3)
    g1_vec = -C @ (P1 @ rates)

    def g0(x):
        return np.cos(np.asarray(x))[..., None] * g0_vec

    def g1(x):
        return np.cos(np.asarray(x))[..., None] * g1_vec

    return u_star, f, {(1, 0): g0, (1, 1): g1}


# ---------------------------------------------------------------------------
# parabolic


def manufactured_heat_parabolic():
    """Space-time manufactured fields: ``u* = exp(-t) exp(-y) cos(x)``.

    Harmonic in space, so ``f = du*/dt = -u*``; the value data is the
    boundary trace ``exp(-t) cos(x)``.
    """
    def u_star(t, x, y):
        return (np.exp(-t) * np.exp(-np.asarray(y))
                * np.cos(np.asarray(x)))[..., None]

    def f(t, x, y):
        return -u_star(t, x, y)

    def g(t, x):
        return (np.exp(-t) * np.cos(np.asarray(x)))[..., None]

    def u0(x, y):
        return (np.exp(-np.asarray(y)) * np.cos(np.asarray(x)))[..., None]

    return u_star, f, g, u0


def flux_balance_defect(values, grid, g1_fn, t, alpha, beta, gamma):
    """Discrete flux-row balance of one stored parabolic time slice.

    Applying the stacked functional matrix ``T`` to the coupled flux
    condition turns it into the two scalar rows ``beta . d_y u(0)`` and
    ``gamma . d_y u(0)`` against rows two and three of ``T g1``; the
    value row drops out because ``beta`` and ``gamma`` annihilate the
    value projection's range.  Returns the worst absolute defect over
    the tangential nodes.
    """
    T, _, _, _ = coupling_matrices(alpha, [beta, gamma])
    dy_weights = grid.normal_derivative(1)[0]
    dy0 = np.einsum("j,xjc->xc", dy_weights, values)
    lhs = np.stack([dy0 @ np.asarray(beta, dtype=float),
                    dy0 @ np.asarray(gamma, dtype=float)], axis=-1)
    g1 = np.asarray(g1_fn(t, grid.xs), dtype=complex)
    rhs = np.einsum("ij,xj->xi", T, g1)[:, 1:]
    return float(np.abs(lhs - rhs).max())


def kappa_fraction(m, k, p):
    """Trace exponent ``(2m - k - 1/p) / (2m)`` in exact arithmetic."""
    return (Fraction(2 * m - k) - Fraction(1, p)) / Fraction(2 * m)


# ---------------------------------------------------------------------------
# kernels


def p_moment_closed_form(k, n, r):
    """Closed form of the kernel at ``nu = k - 1``.

    The algebraic factor ``(1+s)^(nu+1-k)`` collapses to one, leaving
    ``integral_0^inf s^(n-2) exp(-(s+1) r) ds = exp(-r) (n-2)! / r^(n-1)``.
    """
    return math.exp(-r) * math.factorial(n - 2) / float(r) ** (n - 1)


def lemma_lhs_direct(c, y):
    """First side of the composition identity for indices ``(2, 1, 2)``.

    There the inner kernel is elementary, ``p(r) = exp(-r)/r``, so the
    whole integrand is written out without any library call:
    ``integral_0^inf exp(-c(y+r)) / (c(y+r)) * r dr``.
    """
    def integrand(r):
        return math.exp(-c * (y + r)) / (c * (y + r)) * r

    val, err = scipy.integrate.quad(integrand, 0.0, np.inf,
                                    epsabs=1e-300, epsrel=1e-10, limit=200)
    if abs(err) > 1e-8 * max(abs(val), 1e-300):
        raise RuntimeError("oracle quadrature did not converge")
    return val


def lemma_rhs_closed_form(c, y):
    """Second side of the same identity, by special functions alone.

    ``(n-1)!/c^n p_{k+n,nu}^n(c y)`` for indices ``(2, 1, 2)`` needs
    ``p_{4,1}^2(rho) = integral_1^inf u^{-2} exp(-u rho) du``, which
    integrates by parts to ``exp(-rho) - rho E1(rho)``.
    """
    rho = c * y
    return (math.exp(-rho) - rho * scipy.special.exp1(rho)) / c ** 2


# ---------------------------------------------------------------------------
# operator family calculus


def sector_resolvent_sups():
    """Hand suprema for the family ``(1 + lambda)^{-1}``.

    On the closed sector ``|arg z| <= 3 pi / 4`` the distance from
    ``-1`` to the boundary ray is ``sin(pi/4)``, so the sup of the
    modulus is ``sqrt(2)``.  On ``|arg z| <= pi/2`` one has
    ``|1 + z|^2 >= 1 + r^2``, hence
    ``|z / (1+z)^2| <= r / (1 + r^2) <= 1/2`` with equality at
    ``z = i``.
    """
    return math.sqrt(2.0), 0.5


def mikhlin_ratio_sups(lo=1e-3, hi=1e3):
    """Hand suprema for ``m(xi) = xi / (1 + |xi|)`` on a clipped grid.

    ``|m|`` increases toward 1, so on ``|xi| <= hi`` the sup is
    ``hi / (1 + hi)``; the weighted derivative ``xi m'(xi)`` equals
    ``|xi| / (1 + |xi|)^2`` and peaks at exactly ``1/4`` for
    ``|xi| = 1``, which the decade grid contains.
    """
    return hi / (1.0 + hi), 0.25


def khintchine_diag_band(entries, p=4):
    """Bracket for the random-sign constant of a diagonal family, p = 4.

    For diagonal matrices the coordinates decouple, and the exact
    fourth moment ``E|sum eps_j z_j|^4 = (sum |z_j|^2)^2 + E X^2`` with
    ``X = 2 sum_{j<l} eps_j eps_l Re(z_j conj(z_l))`` gives the
    two-sided bound ``S^4 <= E|.|^4 <= 3 S^4`` per coordinate.  The
    family constant therefore lies between the largest entry modulus
    (a one-element subfamily) and ``3^(1/4)`` times it.
    """
    top = max(float(np.abs(np.asarray(e)).max()) for e in entries)
    return top, 3.0 ** 0.25 * top


def two_term_power_bound(a, b, M, N):
    """Both sides of the two-term power inequality, exact arithmetic.

    ``a^M b^N <= M! N! / (M+N)! * (a+b)^(M+N)`` with rationals, so the
    example values are exact, not floating approximations.
    """
    a, b = Fraction(a), Fraction(b)
    lhs = a ** M * b ** N
    rhs = (Fraction(math.factorial(M) * math.factorial(N),
                    math.factorial(M + N)) * (a + b) ** (M + N))
    return lhs, rhs
