"""Matrix-valued interior and boundary symbols with projection structure.

An interior symbol is a homogeneous matrix polynomial

.. math:: A(\\xi) = \\sum_{|\\alpha| = 2m} a_\\alpha \\xi^\\alpha,
          \\qquad a_\\alpha \\in \\mathbb{C}^{N \\times N},

on ``n + 1`` variables, the last of which plays the role of the normal
direction.  A boundary operator consists of rows, each of which is a sum
of homogeneous components of order ``k`` acting through mutually
annihilating projections: row ``j`` is

.. math:: B_j(\\xi) = \\sum_k B_{j,k}(\\xi), \\qquad
          B_{j,k}(\\xi) = \\sum_{|\\beta| = k}
          b_{j,k,\\beta}\\, \\xi^\\beta\\, P_{j,k},

with ``P_{j,k} P_{j,k'} = 0`` for ``k != k'`` and each coefficient
``b_{j,k,beta}`` mapping ``ran(P_{j,k})`` into itself.  The derivative
convention throughout the package is ``D = -i * grad``.

Coefficients are stored sparsely, keyed by exponent tuples.  All symbol
objects are immutable after construction and safe for concurrent reads.
"""

import itertools

import numpy as np

from .errors import ArgumentError

__all__ = [
    "TAU_PROJ",
    "multi_indices",
    "InteriorSymbol",
    "TangentialPolynomial",
    "BoundaryComponent",
    "BoundaryRow",
    "BoundaryOperatorSpec",
    "projection_rank",
    "range_basis",
]

# default idempotency / annihilation tolerance after double-precision products
TAU_PROJ = 1e-10


def multi_indices(dim, total):
    """Yield all exponent tuples of length ``dim`` summing to ``total``."""
    if dim == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in multi_indices(dim - 1, total - head):
            yield (head,) + tail


def _as_matrix(value, N):
    mat = np.asarray(value, dtype=complex)
    if mat.shape == () and N == 1:
        mat = mat.reshape(1, 1)
    if mat.shape != (N, N):
        raise ArgumentError(
            "coefficient shape %r does not match N=%d" % (mat.shape, N))
    if not np.all(np.isfinite(mat.view(float))):
        raise ArgumentError("coefficient contains non-finite entries")
    return mat


def _monomials(coeffs, xi):
    """Evaluate sum of coeff * xi**exponent over a sparse coefficient map."""
    xi = np.asarray(xi, dtype=complex)
    acc = None
    for expo, mat in coeffs.items():
        term = mat * np.prod(xi ** np.asarray(expo))
        acc = term if acc is None else acc + term
    return acc


def projection_rank(P, tol=1e-6):
    """Rank of an idempotent matrix, read off its trace.

    The trace of a projection equals its rank exactly, so rounding the
    real part is reliable whenever the idempotency defect is small.
    """
    r = float(np.trace(P).real)
    ri = int(round(r))
    if abs(r - ri) > tol:
        raise ArgumentError("matrix trace %.3g is not close to an integer; "
                            "not a projection" % r)
    return ri


def range_basis(P):
    """Orthonormal basis of ``ran(P)`` as columns, via SVD.

    Works for oblique projections; the rank is taken from the trace.
    """
    r = projection_rank(P)
    if r == 0:
        return np.zeros((P.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(P)
    return u[:, :r]


class InteriorSymbol:
    """Homogeneous interior symbol of even order ``2m`` on ``n+1`` variables.

    Parameters
    ----------
    order : int
        Total degree ``2m``; must be even and positive.
    dim : int
        Number of variables ``n + 1`` (tangential dims plus normal).
    coeffs : dict
        Map from exponent tuples of length ``dim`` with ``|alpha| = order``
        to ``N x N`` arrays (scalars accepted when ``N == 1``).

    Raises
    ------
    ArgumentError
        For odd order, inconsistent exponent lengths or degrees,
        mismatched matrix shapes, or a missing / singular pure-normal
        leading coefficient ``a0`` (the coefficient of ``(0,...,0,order)``).
    """

    def __init__(self, order, dim, coeffs):
        if order <= 0 or order % 2 != 0:
            raise ArgumentError("order must be a positive even integer, "
                                "got %r" % (order,))
        if dim < 2:
            raise ArgumentError("need at least one tangential dimension")
        if not coeffs:
            raise ArgumentError("empty coefficient map")
        first = next(iter(coeffs.values()))
        N = 1 if np.asarray(first).shape == () else np.asarray(first).shape[0]
        clean = {}
        for expo, mat in coeffs.items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != dim:
                raise ArgumentError("exponent %r has length %d, expected %d"
                                    % (expo, len(expo), dim))
            if any(e < 0 for e in expo):
                raise ArgumentError("negative exponent in %r" % (expo,))
            if sum(expo) != order:
                raise ArgumentError("exponent %r has degree %d, expected %d"
                                    % (expo, sum(expo), order))
            clean[expo] = _as_matrix(mat, N)
        a0_key = (0,) * (dim - 1) + (order,)
        if a0_key not in clean:
            raise ArgumentError("pure normal coefficient a0 for exponent %r "
                                "is required" % (a0_key,))
        self.order = order
        self.dim = dim
        self.N = N
        self.coeffs = clean
        self.a0 = clean[a0_key]

    @property
    def m(self):
        return self.order // 2

    @property
    def n(self):
        """Number of tangential variables."""
        return self.dim - 1

    def eval(self, xi):
        """Evaluate ``A(xi)`` for a (possibly complex) vector of length dim."""
        xi = np.asarray(xi, dtype=complex)
        if xi.shape != (self.dim,):
            raise ArgumentError("xi has shape %r, expected (%d,)"
                                % (xi.shape, self.dim))
        return _monomials(self.coeffs, xi)

    def eval_batch(self, xis):
        """Evaluate at many points; ``xis`` has shape ``(..., dim)``."""
        xis = np.asarray(xis, dtype=complex)
        out = np.zeros(xis.shape[:-1] + (self.N, self.N), dtype=complex)
        for expo, mat in self.coeffs.items():
            mono = np.prod(xis ** np.asarray(expo), axis=-1)
            out += mono[..., None, None] * mat
        return out

    def tangential_parts(self):
        """Split off powers of the normal variable.

        Returns the list ``[t_0, ..., t_order]`` of
        :class:`TangentialPolynomial` such that

        .. math:: A(\\xi', \\eta) = \\sum_l t_l(\\xi')\\, \\eta^{order-l},

        with ``t_l`` homogeneous of degree ``l`` in the tangential block.
        """
        parts = [dict() for _ in range(self.order + 1)]
        for expo, mat in self.coeffs.items():
            tang, normal = expo[:-1], expo[-1]
            l = self.order - normal
            parts[l][tang] = parts[l].get(tang, 0) + mat
        return [TangentialPolynomial(l, self.n, p, self.N)
                for l, p in enumerate(parts)]


class TangentialPolynomial:
    """Homogeneous matrix polynomial in the tangential variables only."""

    def __init__(self, degree, n, coeffs, N):
        self.degree = degree
        self.n = n
        self.N = N
        self.coeffs = {tuple(k): np.asarray(v, dtype=complex)
                       for k, v in coeffs.items()}

    def __call__(self, xi_prime):
        xi_prime = np.atleast_1d(np.asarray(xi_prime, dtype=complex))
        if xi_prime.shape != (self.n,):
            raise ArgumentError("tangential vector has shape %r, expected "
                                "(%d,)" % (xi_prime.shape, self.n))
        if not self.coeffs:
            return np.zeros((self.N, self.N), dtype=complex)
        return _monomials(self.coeffs, xi_prime)


class BoundaryComponent:
    """One homogeneous component ``B_{j,k}`` of a boundary row.

    Parameters
    ----------
    k : int
        Homogeneity order of the component.
    projection : array_like
        The ``N x N`` projection ``P_{j,k}``; may be oblique.
    coeffs : dict
        Map from exponent tuples (length ``dim``, degree ``k``) to
        ``N x N`` coefficient arrays ``b_{j,k,beta}``.
    """

    def __init__(self, k, projection, coeffs, dim, tol=TAU_PROJ):
        if k < 0:
            raise ArgumentError("component order k must be nonnegative")
        self.k = int(k)
        self.dim = dim
        first = np.asarray(projection)
        N = 1 if first.shape == () else first.shape[0]
        self.N = N
        self.projection = _as_matrix(projection, N)
        defect = np.linalg.norm(self.projection @ self.projection
                                - self.projection, 2)
        if defect > tol * max(1.0, np.linalg.norm(self.projection, 2) ** 2):
            raise ArgumentError("projection fails P @ P = P by %.2e" % defect)
        self.rank = projection_rank(self.projection)
        clean = {}
        for expo, mat in coeffs.items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != dim or sum(expo) != self.k or min(expo, default=0) < 0:
                raise ArgumentError("bad boundary exponent %r for order k=%d"
                                    % (expo, self.k))
            mat = _as_matrix(mat, N)
            # range invariance: b must map ran(P) into ran(P)
            leak = np.linalg.norm(
                (np.eye(N) - self.projection) @ mat @ self.projection, 2)
            scale = max(1.0, np.linalg.norm(mat, 2)
                        * np.linalg.norm(self.projection, 2) ** 2)
            if leak > tol * scale:
                raise ArgumentError(
                    "coefficient for %r leaks out of ran(P) by %.2e"
                    % (expo, leak))
            clean[expo] = mat
        self.coeffs = clean

    def eval(self, xi):
        """Evaluate ``B_{j,k}(xi) = sum_beta b_beta xi^beta P``."""
        xi = np.asarray(xi, dtype=complex)
        if xi.shape != (self.dim,):
            raise ArgumentError("xi has shape %r, expected (%d,)"
                                % (xi.shape, self.dim))
        if not self.coeffs:
            return np.zeros((self.N, self.N), dtype=complex)
        return _monomials(self.coeffs, xi) @ self.projection

    def tangential_parts(self):
        """Return ``[t_0, ..., t_k]`` with homogeneous tangential degree ``l``
        such that ``B_{j,k}(xi', eta) = sum_l t_l(xi') eta^(k-l) P``.

        The projection is not folded in; callers multiply by it where the
        companion row structure requires.
        """
        n = self.dim - 1
        parts = [dict() for _ in range(self.k + 1)]
        for expo, mat in self.coeffs.items():
            tang, normal = expo[:-1], expo[-1]
            l = self.k - normal
            parts[l][tang] = parts[l].get(tang, 0) + mat
        return [TangentialPolynomial(l, n, p, self.N)
                for l, p in enumerate(parts)]


class BoundaryRow:
    """A boundary row: mutually annihilating homogeneous components."""

    def __init__(self, components, tol=TAU_PROJ):
        comps = list(components)
        if not comps:
            raise ArgumentError("boundary row needs at least one component")
        orders = [c.k for c in comps]
        if len(set(orders)) != len(orders):
            raise ArgumentError("duplicate component order k in one row")
        N = comps[0].N
        for a, b in itertools.combinations(comps, 2):
            if a.N != b.N:
                raise ArgumentError("component dimensions disagree")
            cross = max(np.linalg.norm(a.projection @ b.projection, 2),
                        np.linalg.norm(b.projection @ a.projection, 2))
            scale = max(1.0, np.linalg.norm(a.projection, 2)
                        * np.linalg.norm(b.projection, 2))
            if cross > tol * scale:
                raise ArgumentError(
                    "projections for k=%d and k=%d do not annihilate "
                    "(defect %.2e)" % (a.k, b.k, cross))
        self.components = sorted(comps, key=lambda c: c.k)
        self.N = N
        self.max_order = max(orders)

    def eval(self, xi):
        """Evaluate the summed row symbol ``B_j(xi)``."""
        out = np.zeros((self.N, self.N), dtype=complex)
        for comp in self.components:
            out += comp.eval(xi)
        return out


class BoundaryOperatorSpec:
    """All boundary rows of a problem.

    The number of rows must equal ``m`` of the interior symbol it is used
    with; that pairing is validated where symbol and spec meet (solvers,
    sweeps), not here, so specs can be built standalone.
    """

    def __init__(self, rows):
        rows = list(rows)
        if not rows:
            raise ArgumentError("boundary spec needs at least one row")
        N = rows[0].N
        if any(r.N != N for r in rows):
            raise ArgumentError("rows act on different dimensions")
        self.rows = rows
        self.N = N

    def eval_row(self, j, xi):
        """Evaluate row ``j`` (1-based, matching the usual numbering)."""
        if not 1 <= j <= len(self.rows):
            raise ArgumentError("row index %d out of range 1..%d"
                                % (j, len(self.rows)))
        return self.rows[j - 1].eval(xi)

    def slots(self):
        """Yield ``(j, k, component)`` over all rows and components."""
        for j, row in enumerate(self.rows, start=1):
            for comp in row.components:
                yield j, comp.k, comp

    def data_dimension(self):
        """Total count of scalar boundary data: sum of projection ranks."""
        return sum(comp.rank for _, _, comp in self.slots())

    def check_against(self, sym):
        """Validate the pairing with an interior symbol.

        Ensures the row count is ``m``, dimensions agree, every component
        order is below ``2m``, and the data dimension equals ``m * N``
        (square solvability of the boundary map).
        """
        if self.N != sym.N:
            raise ArgumentError("boundary spec dimension N=%d does not "
                                "match symbol N=%d" % (self.N, sym.N))
        if len(self.rows) != sym.m:
            raise ArgumentError("expected m=%d boundary rows, got %d"
                                % (sym.m, len(self.rows)))
        for row in self.rows:
            if row.max_order >= sym.order:
                raise ArgumentError("boundary order %d must be below %d"
                                    % (row.max_order, sym.order))
            for comp in row.components:
                if comp.dim != sym.dim:
                    raise ArgumentError("boundary exponents live in dim %d, "
                                        "symbol in dim %d"
                                        % (comp.dim, sym.dim))
        dd = self.data_dimension()
        if dd != sym.m * sym.N:
            raise ArgumentError(
                "boundary data dimension %d != m*N = %d; the boundary map "
                "cannot be square" % (dd, sym.m * sym.N))
