"""Randomized boundedness estimation for operator families.

Uniform norm bounds are not enough for the solution-operator calculus;
the working notion is the random-sign average

.. math:: \\Bigl(\\mathbb{E}\\bigl\\|\\sum_\\nu \\varepsilon_\\nu
          T_\\nu x_\\nu\\bigr\\|_p^p\\Bigr)^{1/p} \\le C
          \\Bigl(\\mathbb{E}\\bigl\\|\\sum_\\nu \\varepsilon_\\nu
          x_\\nu\\bigr\\|_p^p\\Bigr)^{1/p},

whose best constant this module estimates by Monte-Carlo maximization
of the ratio over subfamilies and test vectors, with the sign average
computed exactly when the subfamily is small.  The estimator is a
lower bound by construction; certification is out of scope.  On top of
it sit the derived checks: geometric-series resolvents of a family
with constant smaller than one, sector derivative families of a
holomorphic family, frequency-multiplier sup tables, and the factorial
two-term power inequality used by the kernel summation arguments.
"""

import math

import numpy as np

from .errors import ArgumentError, AssumptionError

__all__ = [
    "OperatorFamily",
    "RBoundEstimate",
    "operator_pnorm",
    "estimate_rbound",
    "neumann_rbound_check",
    "sector_derivative_check",
    "mikhlin_symbol_check",
    "mikhlin_resolvent_suite",
    "combinatorial_inequality_test",
]

# exact sign enumeration is affordable up to 2^12 = 4096 patterns
_ENUM_MAX = 12
# sampled sign patterns once enumeration is off the table
_SIGN_SAMPLES = 2048
# power-iteration settings for the ell_p operator norm
_BOYD_ITERS = 200
_BOYD_TOL = 1e-12


class OperatorFamily:
    """A finite indexed family of same-shape square matrices.

    Parameters
    ----------
    generator : callable or sequence
        Either ``index -> (d, d) array`` evaluated on ``index_set``, or
        a sequence of matrices (then ``index_set`` defaults to their
        positions).
    index_set : sequence, optional
        Parameter values the family is sampled at.

    Notes
    -----
    Scalars are accepted and promoted to 1x1 matrices, so scalar
    families can be written without ceremony.
    """

    def __init__(self, generator, index_set=None):
        if callable(generator):
            if index_set is None:
                raise ArgumentError("a callable family needs an explicit "
                                    "index_set to sample")
            mats = [generator(idx) for idx in index_set]
        else:
            mats = list(generator)
            if index_set is None:
                index_set = list(range(len(mats)))
        if not mats:
            raise ArgumentError("operator family must not be empty")
        mats = [np.atleast_2d(np.asarray(M, dtype=complex)) for M in mats]
        d = mats[0].shape[0]
        for M in mats:
            if M.shape != (d, d):
                raise ArgumentError(
                    "family matrices must share one square shape, got %s "
                    "and %s" % ((d, d), M.shape))
            if not np.all(np.isfinite(M)):
                raise ArgumentError("family matrices must be finite")
        self.matrices = mats
        self.index_set = list(index_set)
        self.dim = d

    def __len__(self):
        return len(self.matrices)

    def map(self, fn):
        """New family ``{fn(T)}`` over the same index set."""
        return OperatorFamily([fn(M) for M in self.matrices],
                              index_set=list(self.index_set))


class RBoundEstimate:
    """Outcome of the randomized boundedness estimator.

    Attributes
    ----------
    p : float
        Exponent of the random-sign averages.
    estimate : float
        Best observed lower bound: the maximal Rademacher ratio or the
        uniform norm sup, whichever is larger.
    sup_norm : float
        Largest single-operator ``ell_p`` norm in the family, itself a
        lower bound (one-element subfamily).
    best_ratio : float
        Maximal observed Rademacher ratio.
    trials : int
    confidence_spread : float
        Relative spread of per-block trial maxima; small values mean
        the maximization has saturated.
    """

    def __init__(self, p, estimate, sup_norm, best_ratio, trials,
                 confidence_spread):
        self.p = p
        self.estimate = estimate
        self.sup_norm = sup_norm
        self.best_ratio = best_ratio
        self.trials = trials
        self.confidence_spread = confidence_spread

    def __repr__(self):
        return ("RBoundEstimate(p=%g, estimate=%.6g, sup_norm=%.6g, "
                "trials=%d, spread=%.2e)"
                % (self.p, self.estimate, self.sup_norm, self.trials,
                   self.confidence_spread))


def _dual_exponent(p):
    if p == 1.0:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _vec_pnorm(v, p, axis=-1):
    v = np.abs(v)
    if np.isinf(p):
        return v.max(axis=axis)
    return (v ** p).sum(axis=axis) ** (1.0 / p)


def operator_pnorm(M, p=2):
    """Operator norm of a matrix on ``ell_p``, exact for p in {1,2,inf}.

    General exponents use Boyd's fixed-point iteration, which converges
    to a (generically global) maximizer of ``|Mx|_p / |x|_p``; random
    restarts guard against poor starting vectors.  The returned value is
    a lower bound in the worst case, which matches the estimator's
    semantics.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if p == 2:
        return float(np.linalg.norm(M, 2))
    if p == 1:
        return float(np.abs(M).sum(axis=0).max())
    if np.isinf(p):
        return float(np.abs(M).sum(axis=1).max())
    q = _dual_exponent(p)
    rng = np.random.default_rng(12345)
    best = 0.0
    for restart in range(3):
        x = rng.standard_normal(M.shape[1]) \
            + 1j * rng.standard_normal(M.shape[1])
        x /= _vec_pnorm(x, p)
        prev = 0.0
        for _ in range(_BOYD_ITERS):
            y = M @ x
            ny = _vec_pnorm(y, p)
            if ny == 0.0:
                break
            # dual ascent: steer x toward the norming functional of Mx
            z = np.abs(y) ** (p - 1) * np.sign(y)
            w = M.conj().T @ z
            nw = _vec_pnorm(w, q)
            if nw == 0.0:
                break
            x = np.abs(w) ** (q - 1) * np.sign(w)
            x /= _vec_pnorm(x, p)
            if abs(ny - prev) <= _BOYD_TOL * max(1.0, ny):
                break
            prev = ny
        best = max(best, float(_vec_pnorm(M @ x, p)))
    return best


def _sign_patterns(count, rng):
    """Sign matrix (patterns, count): exact enumeration or a sample."""
    if count <= _ENUM_MAX:
        grid = np.indices((2,) * count).reshape(count, -1).T
        return 2.0 * grid - 1.0
    return rng.choice([-1.0, 1.0], size=(_SIGN_SAMPLES, count))


def _rademacher_ratio(mats, xs, p, rng):
    """Ratio of the two random-sign p-averages for one subfamily.

    ``mats`` is (k, d, d), ``xs`` is (k, d).  The sign average runs over
    all 2^k patterns when affordable, otherwise over a fixed-size
    sample; either way numerator and denominator share the patterns.
    """
    signs = _sign_patterns(len(mats), rng)
    tx = np.einsum("kij,kj->ki", mats, xs)
    top = signs @ tx
    bot = signs @ xs
    if np.isinf(p):
        num = _vec_pnorm(top, p).max()
        den = _vec_pnorm(bot, p).max()
    else:
        num = (_vec_pnorm(top, p) ** p).mean() ** (1.0 / p)
        den = (_vec_pnorm(bot, p) ** p).mean() ** (1.0 / p)
    if den == 0.0:
        return 0.0
    return float(num / den)


def estimate_rbound(fam, p=2, trials=200, subset_size=8, seed=0):
    """Estimate the random-sign boundedness constant of a family.

    Monte-Carlo maximization of the Rademacher ratio over random
    subfamilies and Gaussian test vectors.  The result never certifies
    an upper bound: both the best ratio and the uniform-norm sup are
    lower bounds on the true constant, and the larger of the two is
    reported as the estimate.

    Parameters
    ----------
    fam : OperatorFamily
    p : float
        Exponent of the averages; 2 gives the Hilbert-space case where
        the constant coincides with the uniform norm bound.
    trials : int
        At least 100; each trial draws one subfamily and one vector set.
    subset_size : int
        Vectors per trial.  Up to 12 the sign average is enumerated
        exactly (4096 patterns); beyond that signs are sampled.
    seed : int
        Trials are seeded individually, so runs are reproducible and
        could be distributed.

    Returns
    -------
    RBoundEstimate
    """
    if not isinstance(fam, OperatorFamily):
        fam = OperatorFamily(fam)
    if trials < 100:
        raise ArgumentError("need at least 100 trials for a usable "
                            "maximization, got %d" % trials)
    if subset_size < 1:
        raise ArgumentError("subset_size must be positive")
    mats = np.stack(fam.matrices)
    sup_norm = max(operator_pnorm(M, p) for M in fam.matrices)

    ratios = np.empty(trials)
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        k = int(rng.integers(1, subset_size + 1))
        pick = rng.integers(0, len(fam), size=k)
        xs = rng.standard_normal((k, fam.dim)) \
            + 1j * rng.standard_normal((k, fam.dim))
        ratios[trial] = _rademacher_ratio(mats[pick], xs, p, rng)

    best_ratio = float(ratios.max())
    # spread of block maxima measures how saturated the search is
    blocks = np.array_split(ratios, 4)
    tops = np.array([b.max() for b in blocks])
    spread = float((tops.max() - tops.min()) / max(tops.max(), 1e-300))
    return RBoundEstimate(p=p, estimate=max(best_ratio, sup_norm),
                          sup_norm=sup_norm, best_ratio=best_ratio,
                          trials=trials, confidence_spread=spread)


def neumann_rbound_check(fam, p=2, trials=200, subset_size=8, seed=0,
                         tol=0.05):
    """Geometric-series bound for resolvents of a small family.

    For a family with estimated constant ``rho < 1`` the operators
    ``(I - T)^{-1}`` form a family whose constant is at most
    ``1/(1 - rho)``; this runs the estimator on both sides and checks
    the inequality with slack ``tol``.

    Returns
    -------
    dict
        ``rho``, ``resolvent`` (both RBoundEstimate), ``bound``,
        ``passed``.

    Raises
    ------
    AssumptionError
        If the estimated ``rho`` is not below one.
    """
    if not isinstance(fam, OperatorFamily):
        fam = OperatorFamily(fam)
    rho_est = estimate_rbound(fam, p=p, trials=trials,
                              subset_size=subset_size, seed=seed)
    rho = rho_est.estimate
    if rho >= 1.0:
        raise AssumptionError(
            "geometric-series resolvent bound needs an estimated "
            "constant below one, got %.6g" % rho)
    eye = np.eye(fam.dim)
    res_fam = fam.map(lambda M: np.linalg.inv(eye - M))
    res_est = estimate_rbound(res_fam, p=p, trials=trials,
                              subset_size=subset_size, seed=seed + 1)
    bound = 1.0 / (1.0 - rho)
    return {
        "rho": rho_est,
        "resolvent": res_est,
        "bound": bound,
        "passed": bool(res_est.estimate <= bound * (1.0 + tol)),
    }


def _sector_lambdas(half_angle, count_mod=9, count_arg=7,
                    decades=(-2.0, 2.0)):
    """Log-radial sample of the open sector |arg z| < half_angle."""
    moduli = np.logspace(decades[0], decades[1], count_mod)
    args = np.linspace(-half_angle, half_angle, count_arg) * (1.0 - 1e-9)
    return [complex(r * np.exp(1j * a)) for r in moduli for a in args]


def sector_derivative_check(T_fn, phi, phi_prime, p=2, trials=200,
                            subset_size=8, seed=0, tol=0.05,
                            fd_tol=1e-5):
    """Derivative-family bound for a holomorphic operator family.

    A family holomorphic and bounded on the sector of half-angle
    ``pi - phi`` has ``{lambda T'(lambda)}`` bounded on every strictly
    smaller sector of half-angle ``pi - phi_prime``, with constant at
    most ``C / sin(phi_prime - phi)^2`` where ``C`` is the constant on
    the larger sector.  Derivatives are central finite differences with
    step ``1e-5 (1 + |lambda|)``, validated by step halving.

    Parameters
    ----------
    T_fn : callable
        ``lambda -> matrix`` (scalars are promoted), holomorphic on the
        larger sector.
    phi, phi_prime : float
        ``0 <= phi < phi_prime < pi``.

    Returns
    -------
    dict
        ``base`` and ``derivative`` estimates, ``bound``, ``passed``,
        ``fd_max_disagreement``, ``fd_stable``.
    """
    if not (0.0 <= phi < phi_prime < np.pi):
        raise ArgumentError(
            "need 0 <= phi < phi_prime < pi, got phi=%.4g phi_prime=%.4g"
            % (phi, phi_prime))
    base_fam = OperatorFamily(
        [np.atleast_2d(np.asarray(T_fn(lam), dtype=complex))
         for lam in _sector_lambdas(np.pi - phi)])
    base_est = estimate_rbound(base_fam, p=p, trials=trials,
                               subset_size=subset_size, seed=seed)

    deriv_mats = []
    fd_worst = 0.0
    lambdas = _sector_lambdas(np.pi - phi_prime)
    for lam in lambdas:
        h = 1e-5 * (1.0 + abs(lam))
        diff = {}
        for step in (h, 0.5 * h):
            plus = np.atleast_2d(np.asarray(T_fn(lam + step), dtype=complex))
            minus = np.atleast_2d(np.asarray(T_fn(lam - step), dtype=complex))
            diff[step] = (plus - minus) / (2.0 * step)
        scale = max(np.abs(diff[h]).max(), 1e-300)
        fd_worst = max(fd_worst,
                       float(np.abs(diff[h] - diff[0.5 * h]).max() / scale))
        deriv_mats.append(lam * diff[0.5 * h])
    deriv_fam = OperatorFamily(deriv_mats, index_set=lambdas)
    deriv_est = estimate_rbound(deriv_fam, p=p, trials=trials,
                                subset_size=subset_size, seed=seed + 1)

    bound = base_est.estimate / math.sin(phi_prime - phi) ** 2
    return {
        "base": base_est,
        "derivative": deriv_est,
        "bound": bound,
        "passed": bool(deriv_est.estimate <= bound * (1.0 + tol)),
        "fd_max_disagreement": fd_worst,
        "fd_stable": bool(fd_worst <= fd_tol),
    }


def _log_xi_grid(n, decades, points_per_decade):
    """Sign-symmetric log grid on (R \\ {0})^n, as an iterator of points."""
    mags = np.logspace(decades[0], decades[1],
                       int(round((decades[1] - decades[0])
                                 * points_per_decade)) + 1)
    axis = np.concatenate([-mags[::-1], mags])
    for idx in np.ndindex(*(len(axis),) * n):
        yield np.array([axis[i] for i in idx])


def mikhlin_symbol_check(m_fn, n=1, derivative_orders=None,
                         decades=(-3.0, 3.0), points_per_decade=13,
                         fd_rel=1e-4):
    """Sup table of ``|xi^alpha D^alpha m(xi)|`` over a log grid.

    Derivatives up to one per axis (``alpha`` in {0,1}^n) are enough
    for the multiplier theorem in use; they are computed by central
    differences with per-axis relative step, and each sup is recomputed
    at half step so divergence under refinement is visible.

    Parameters
    ----------
    m_fn : callable
        ``xi (n-vector) -> scalar or matrix``, smooth away from 0.
    derivative_orders : iterable of tuples, optional
        Subset of {0,1}^n; defaults to all of it.

    Returns
    -------
    dict
        ``sups``: {alpha: sup}, ``refined``: {alpha: sup at half step},
        ``diverging``: list of alpha whose sup grew by more than 10%
        under refinement, ``passed``: that list is empty.
    """
    if derivative_orders is None:
        derivative_orders = [tuple(a) for a in np.ndindex(*(2,) * n)]
    orders = [tuple(int(b) for b in a) for a in derivative_orders]
    for a in orders:
        if len(a) != n or any(b not in (0, 1) for b in a):
            raise ArgumentError("derivative orders must lie in {0,1}^%d, "
                                "got %s" % (n, (a,)))

    def weighted(xi, alpha, rel):
        # alternating-sign central stencil over the alpha-support axes
        total = 0.0
        support = [i for i, b in enumerate(alpha) if b]
        for signs in np.ndindex(*(2,) * len(support)):
            pt = xi.astype(float).copy()
            coef = 1.0
            for s, i in zip(signs, support):
                h = rel * abs(xi[i])
                pt[i] += h if s == 0 else -h
                coef *= (1.0 if s == 0 else -1.0) / (2.0 * h)
            total = total + coef * np.asarray(m_fn(pt), dtype=complex)
        weight = np.prod([xi[i] for i in support]) if support else 1.0
        val = np.atleast_2d(np.asarray(total, dtype=complex)) * weight
        return float(np.linalg.norm(val, 2))

    sups, refined, diverging = {}, {}, []
    for alpha in orders:
        best = {fd_rel: 0.0, 0.5 * fd_rel: 0.0}
        for xi in _log_xi_grid(n, decades, points_per_decade):
            for rel in best:
                best[rel] = max(best[rel], weighted(xi, alpha, rel))
        sups[alpha] = best[fd_rel]
        refined[alpha] = best[0.5 * fd_rel]
        if refined[alpha] > 1.10 * max(sups[alpha], 1e-300):
            diverging.append(alpha)
    return {
        "sups": sups,
        "refined": refined,
        "diverging": diverging,
        "passed": not diverging,
    }


def mikhlin_resolvent_suite(m=1, lam=1.0, ks=range(1, 33),
                            mu_decades=(-3.0, 3.0), points_per_decade=13,
                            xi_decades=(-3.0, 3.0), spread_max=2.0,
                            fd_rel=1e-4):
    """Uniformity of the iterated-resolvent multiplier sups in ``k``.

    The family is ``mu^k (mu + (lam + xi^{2m})^{1/2m})^{-k}`` in one
    frequency variable.  For each power ``k`` the sup of
    ``|xi^alpha D^alpha M|`` is taken over the whole ``(mu, xi)`` grid;
    uniformity means those per-k sups stay within ``spread_max`` of
    each other for every derivative order.  The derivative reading is
    the same weighted central difference as
    :func:`mikhlin_symbol_check`, evaluated on the full grid at once
    so the 32-power sweep stays fast.

    Returns
    -------
    dict
        ``table``: {alpha: {k: sup}}, ``spreads``: {alpha: ratio},
        ``passed``.
    """
    mus = np.logspace(mu_decades[0], mu_decades[1],
                      int(round((mu_decades[1] - mu_decades[0])
                                * points_per_decade)) + 1)
    mags = np.logspace(xi_decades[0], xi_decades[1],
                       int(round((xi_decades[1] - xi_decades[0])
                                 * points_per_decade)) + 1)
    xi = np.concatenate([-mags[::-1], mags])

    def base(xi_vals, k):
        root = (lam + xi_vals ** (2 * m)) ** (1.0 / (2 * m))
        # mu axis first: (len(mus), len(xi_vals))
        frac = mus[:, None] / (mus[:, None] + root[None, :])
        return frac ** k

    ks = list(ks)
    table = {(0,): {}, (1,): {}}
    for k in ks:
        table[(0,)][k] = float(np.abs(base(xi, k)).max())
        h = fd_rel * np.abs(xi)
        deriv = (base(xi + h, k) - base(xi - h, k)) / (2.0 * h)
        table[(1,)][k] = float(np.abs(xi * deriv).max())
    spreads = {}
    for alpha, row in table.items():
        vals = np.array(list(row.values()))
        spreads[alpha] = float(vals.max() / max(vals.min(), 1e-300))
    return {
        "table": table,
        "spreads": spreads,
        "passed": bool(all(s < spread_max for s in spreads.values())),
    }


def combinatorial_inequality_test(samples=10000, seed=0, slack=1e-12):
    """Two-term power inequality, tested in the log domain.

    Checks ``a^M b^N <= M! N! / (M+N)! (a+b)^{M+N}`` for random
    ``a, b in [0, 100]`` and integer ``M, N in [0, 20]``, plus forced
    edge cases (zero bases, zero exponents, the equality case
    ``M = N = 0``).  Factorials go through ``lgamma`` so nothing
    overflows.

    Returns
    -------
    dict
        ``cases``, ``violations``, ``worst_margin`` (smallest
        ``log rhs - log lhs`` seen; negative would be a violation
        beyond slack), ``passed``.
    """
    rng = np.random.default_rng(seed)
    forced = [
        (1.0, 1.0, 1, 1),
        (2.0, 3.0, 1, 2),
        (0.0, 5.0, 3, 2),
        (5.0, 0.0, 2, 0),
        (7.0, 7.0, 0, 0),
        (100.0, 100.0, 20, 20),
        (1e-8, 100.0, 20, 0),
    ]
    cases = list(forced)
    for _ in range(samples - len(forced)):
        cases.append((float(rng.uniform(0.0, 100.0)),
                      float(rng.uniform(0.0, 100.0)),
                      int(rng.integers(0, 21)),
                      int(rng.integers(0, 21))))

    violations = 0
    worst = np.inf
    for a, b, M, N in cases:
        # 0^0 = 1 by the empty-product convention; log(0) terms only
        # enter with positive exponents, where lhs = 0 passes outright
        if (a == 0.0 and M > 0) or (b == 0.0 and N > 0):
            continue
        log_lhs = (M * math.log(a) if M else 0.0) \
            + (N * math.log(b) if N else 0.0)
        if a + b == 0.0:
            log_rhs = 0.0
        else:
            log_rhs = (math.lgamma(M + 1) + math.lgamma(N + 1)
                       - math.lgamma(M + N + 1)
                       + (M + N) * math.log(a + b))
        margin = log_rhs - log_lhs
        worst = min(worst, margin)
        if margin < -slack * max(1.0, abs(log_rhs)):
            violations += 1
    return {
        "cases": len(cases),
        "violations": violations,
        "worst_margin": float(worst),
        "passed": violations == 0,
    }
