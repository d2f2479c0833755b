"""First-order reduction of the boundary symbol problem on a half-line.

For a frequency/spectral pair scaled to ``(b, sigma)`` the interior ODE

.. math:: \\sigma v + \\sum_{l=0}^{2m} \\tilde a_l(b)\\, D_y^{2m-l} v = 0,
          \\qquad D_y = -i\\,\\partial_y,

is rewritten for the slot vector ``w = (v, \\rho^{-1} D_y v, \\ldots,
\\rho^{-(2m-1)} D_y^{2m-1} v)`` as ``D_y w = \\rho A_0(b, \\sigma) w``,
so decaying solutions are ``w(y) = e^{i \\rho A_0 y} w(0)`` with ``w(0)``
in the stable (negative real part of ``i A_0``) invariant subspace.
The module builds ``A_0``, verifies it against the determinant identity

.. math:: \\det(\\eta I - A_0)\\,\\det a_0 = \\det(\\sigma I + A(b, \\eta)),

splits the spectrum with an ordered Schur decomposition, and evaluates
the decaying propagator and scaled boundary rows used by the solution
operator.
"""

import numpy as np
import scipy.linalg

from .errors import ArgumentError, AssumptionError, ConsistencyError

__all__ = [
    "TAU_SPLIT",
    "GAP_MIN",
    "scale_variables",
    "CompanionSystem",
    "SpectralSplit",
    "build_companion",
    "spectral_split",
    "scaled_boundary_row",
    "propagator",
    "triangular_exp",
]

# projection identity tolerance after the Schur-based construction
TAU_SPLIT = 1e-9
# smallest admissible distance of eigenvalues of i*A0 to the imaginary axis
GAP_MIN = 1e-8
# relative tolerance for the determinant cross-check of the block layout
_TOL_CHARPOLY = 1e-8
# eigenvector-basis conditioning above which expm is used instead
_COND_EIG_MAX = 1e10


def scale_variables(lam, xi_prime, order):
    """Split ``(lambda, xi')`` into the scale ``rho`` and unit-ball data.

    Uses ``rho = (|lambda| + |xi'|^order)^(1/order)``, which is always
    positive real, keeps ``b = xi'/rho`` real, and puts
    ``sigma = lambda/rho^order`` in the same closed sector as ``lambda``
    with ``|sigma| + |b|^order = 1``.

    Parameters
    ----------
    lam : complex
    xi_prime : array_like
        Real tangential frequency vector.
    order : int
        The interior order ``2m``.

    Returns
    -------
    rho : float
    b : ndarray
    sigma : complex

    Raises
    ------
    ArgumentError
        If both inputs vanish; the reduction is undefined at the origin.
    """
    xi = np.atleast_1d(np.asarray(xi_prime, dtype=float))
    lam = complex(lam)
    bulk = abs(lam) + float(np.linalg.norm(xi)) ** order
    if bulk == 0.0:
        raise ArgumentError("scaling is undefined at lambda = 0, xi' = 0")
    rho = bulk ** (1.0 / order)
    return rho, xi / rho, lam / bulk


class CompanionSystem:
    """First-order block reduction at fixed ``(b, sigma)``.

    Attributes
    ----------
    A0 : ndarray
        The ``2mN x 2mN`` block companion matrix: identity blocks on the
        block superdiagonal, coefficient blocks in the last block row.
    b : ndarray
    sigma : complex
    rho : float
        Carried along for propagator evaluation; the matrix itself is
        scale-free.
    sym : InteriorSymbol
    split : SpectralSplit or None
        Filled by :func:`spectral_split` on first use.
    """

    def __init__(self, A0, b, sigma, rho, sym):
        self.A0 = A0
        self.b = b
        self.sigma = sigma
        self.rho = rho
        self.sym = sym
        self.split = None

    @property
    def block_size(self):
        return self.sym.N

    @property
    def blocks(self):
        return 2 * self.sym.m


class SpectralSplit:
    """Stable/unstable splitting of ``i A0``.

    Attributes
    ----------
    eigvals_minus, eigvals_plus : ndarray
        Eigenvalues of ``i A0`` with negative / positive real part.
    P_minus, P_plus : ndarray
        The spectral projections; ``P_plus + P_minus = I``.
    Q_minus : ndarray
        Orthonormal columns spanning the stable invariant subspace,
        shape ``(2mN, mN)``.
    T11 : ndarray
        Upper triangular restriction of ``i A0`` to that subspace in the
        ``Q_minus`` frame.
    gap : float
        Smallest ``|Re|`` over all eigenvalues of ``i A0``.
    """

    def __init__(self, eigvals_minus, eigvals_plus, P_minus, P_plus,
                 Q_minus, T11, gap):
        self.eigvals_minus = eigvals_minus
        self.eigvals_plus = eigvals_plus
        self.P_minus = P_minus
        self.P_plus = P_plus
        self.Q_minus = Q_minus
        self.T11 = T11
        self.gap = gap


def build_companion(sym, b, sigma, rho=1.0, check=True):
    """Assemble the block companion matrix ``A0(b, sigma)``.

    Parameters
    ----------
    sym : InteriorSymbol
    b : array_like
        Scaled tangential frequency (length ``n``); small imaginary
        parts are allowed for holomorphy probes.
    sigma : complex
        Scaled spectral parameter.
    rho : float
        Scale to carry for later propagator calls.
    check : bool
        Verify the determinant identity at pseudo-random points; on by
        default, costs three small determinants.

    Raises
    ------
    AssumptionError
        If the pure-normal leading coefficient is singular.
    ConsistencyError
        If the assembled matrix fails the determinant cross-check.
    """
    N = sym.N
    twom = sym.order
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    if b.shape != (sym.n,):
        raise ArgumentError("b has shape %r, expected (%d,)"
                            % (b.shape, sym.n))
    sigma = complex(sigma)
    parts = sym.tangential_parts()
    tilde = [parts[l](b) for l in range(twom + 1)]
    sv = np.linalg.svd(sym.a0, compute_uv=False)
    if sv[-1] <= 1e-14 * sv[0]:
        raise AssumptionError("pure normal leading coefficient is singular")
    a0_inv = np.linalg.inv(sym.a0)
    # c_j = -a0^{-1} tilde_a_j(b), with sigma folded into the top order
    cs = [None] + [-a0_inv @ tilde[j] for j in range(1, twom)]
    cs.append(-a0_inv @ (tilde[twom] + sigma * np.eye(N)))
    A0 = np.zeros((twom * N, twom * N), dtype=complex)
    for s in range(twom - 1):
        A0[s * N:(s + 1) * N, (s + 1) * N:(s + 2) * N] = np.eye(N)
    last = (twom - 1) * N
    for s in range(twom):
        A0[last:, s * N:(s + 1) * N] = cs[twom - s]
    cs_obj = CompanionSystem(A0, b, sigma, float(rho), sym)
    if check:
        _check_charpoly(cs_obj, tilde)
    return cs_obj


def _check_charpoly(cs, tilde):
    """det(eta I - A0) det a0 must equal det(sigma I + A(b, eta))."""
    sym = cs.sym
    rng = np.random.default_rng(12345)
    det_a0 = np.linalg.det(sym.a0)
    eye = np.eye(cs.A0.shape[0])
    for _ in range(3):
        eta = complex(rng.standard_normal(), rng.standard_normal())
        lhs = np.linalg.det(eta * eye - cs.A0) * det_a0
        full = sum(t * eta ** (sym.order - l) for l, t in enumerate(tilde))
        rhs = np.linalg.det(cs.sigma * np.eye(sym.N) + full)
        scale = max(1.0, abs(rhs))
        if abs(lhs - rhs) > _TOL_CHARPOLY * scale:
            raise ConsistencyError(
                "companion characteristic polynomial mismatch at eta=%r: "
                "|%.6g - %.6g| relative to %.3g" % (eta, lhs, rhs, scale))


def spectral_split(cs):
    """Split the spectrum of ``i A0`` across the imaginary axis.

    Uses an ordered complex Schur decomposition (stable eigenvalues
    first), solves a small Sylvester equation for the coupling block of
    the spectral projection, and validates the projection algebra.

    Returns
    -------
    SpectralSplit
        Also cached on ``cs.split``.

    Raises
    ------
    AssumptionError
        If any eigenvalue of ``i A0`` sits within ``GAP_MIN`` of the
        imaginary axis, or the stable dimension is not ``mN``; both
        signal an ellipticity or sector breach for this ``(b, sigma)``.
    ConsistencyError
        If the constructed projections fail their algebra beyond
        ``TAU_SPLIT``.
    """
    if cs.split is not None:
        return cs.split
    sym = cs.sym
    dim = cs.A0.shape[0]
    half = dim // 2
    T, Z, sdim = scipy.linalg.schur(1j * cs.A0, output="complex", sort="lhp")
    eigs = np.diag(T)
    gap = float(np.min(np.abs(eigs.real)))
    if gap < GAP_MIN:
        raise AssumptionError(
            "spectral gap violated: eigenvalue of i*A0 within %.1e of the "
            "imaginary axis (gap %.3e) at b=%r sigma=%r"
            % (GAP_MIN, gap, cs.b, cs.sigma))
    if sdim != half:
        raise AssumptionError(
            "stable subspace has dimension %d, expected %d; the pair "
            "(b, sigma) leaves the admissible set" % (sdim, half))
    T11 = T[:sdim, :sdim]
    T12 = T[:sdim, sdim:]
    T22 = T[sdim:, sdim:]
    X = scipy.linalg.solve_sylvester(T11, -T22, T12)
    inner = np.zeros((dim, dim), dtype=complex)
    inner[:sdim, :sdim] = np.eye(sdim)
    inner[:sdim, sdim:] = X
    P_minus = Z @ inner @ Z.conj().T
    P_plus = np.eye(dim) - P_minus
    scale = max(1.0, np.linalg.norm(P_minus, 2) ** 2)
    defect = max(
        np.linalg.norm(P_minus @ P_minus - P_minus, 2),
        np.linalg.norm(P_plus @ P_minus, 2),
    )
    if defect > TAU_SPLIT * scale:
        raise ConsistencyError("spectral projection algebra defect %.2e "
                               "exceeds %.1e" % (defect, TAU_SPLIT))
    comm = np.linalg.norm(cs.A0 @ P_minus - P_minus @ cs.A0, 2)
    if comm > 1e-8 * max(1.0, np.linalg.norm(cs.A0, 2) * scale):
        raise ConsistencyError("projection does not commute with the "
                               "companion matrix (defect %.2e)" % comm)
    split = SpectralSplit(eigs[:sdim], eigs[sdim:], P_minus, P_plus,
                          Z[:, :sdim], T11, gap)
    cs.split = split
    return split


def scaled_boundary_row(component, b, order):
    """Scaled block row of one boundary component acting on slot vectors.

    For a component of order ``k`` the row has ``k + 1`` leading
    nonzero blocks; block ``s`` is the tangential part of degree
    ``k - s`` evaluated at ``b``, times the component projection.
    Applying the row to the slot vector of a solution reproduces the
    boundary trace divided by ``rho**k``.

    Parameters
    ----------
    component : BoundaryComponent
    b : array_like
        Scaled tangential frequency.
    order : int
        Interior order ``2m`` (sets the number of blocks).

    Returns
    -------
    ndarray
        Shape ``(N, 2m*N)``.
    """
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    N = component.N
    k = component.k
    if k >= order:
        raise ArgumentError("component order %d must be below %d"
                            % (k, order))
    parts = component.tangential_parts()
    row = np.zeros((N, order * N), dtype=complex)
    for s in range(k + 1):
        row[:, s * N:(s + 1) * N] = parts[k - s](b) @ component.projection
    return row


def propagator(cs, ys, deriv=0):
    """Decaying propagator ``D_y^deriv e^{i rho A0 y} Q_minus`` at nodes.

    Restricted to the stable subspace the propagator is
    ``Q_minus expm(rho y T11)``; normal derivatives multiply in powers
    of ``-i rho T11``.  Evaluation diagonalizes ``T11`` once and falls
    back to per-node matrix exponentials if the eigenvector basis is
    ill conditioned.

    Parameters
    ----------
    cs : CompanionSystem
        Split is computed on demand.
    ys : array_like
        Nonnegative evaluation points.
    deriv : int
        Order of ``D_y`` applied before evaluation.

    Returns
    -------
    ndarray
        Shape ``(len(ys), 2mN, mN)``.
    """
    split = spectral_split(cs)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if np.any(ys < 0):
        raise ArgumentError("propagator nodes must be nonnegative")
    T11 = split.T11
    front = split.Q_minus
    if deriv:
        front = front @ np.linalg.matrix_power(-1j * cs.rho * T11, deriv)
    mats = triangular_exp(T11, cs.rho * ys)
    return np.einsum("ij,yjk->yik", front, mats)


def triangular_exp(T, ts):
    """Batched ``expm(t T)`` over scalars ``ts`` for one small matrix.

    Diagonalizes once when the eigenvector basis is well conditioned
    and falls back to per-node ``expm`` otherwise, so defective or
    nearly defective ``T`` stay correct at the price of speed.
    """
    ts = np.asarray(ts, dtype=float)
    lam, V = np.linalg.eig(T)
    if np.linalg.cond(V) <= _COND_EIG_MAX:
        Vinv = np.linalg.inv(V)
        phases = np.exp(np.multiply.outer(ts, lam))
        return np.einsum("ij,yj,jk->yik", V, phases, Vinv)
    return np.stack([scipy.linalg.expm(t * T) for t in ts])
