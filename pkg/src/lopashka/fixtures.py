"""Built-in problem fixtures.

A small catalogue of ready-made interior symbols with boundary rows,
used by the command line (``fixtures list`` / ``fixtures emit``), the
test suite, and as convenient starting points.  All fixtures have one
tangential dimension; all are solvable except ``duplicate-row``, which
deliberately repeats a row so that unique solvability fails and sweeps
must report the rank deficiency.
"""

import numpy as np

from .errors import ArgumentError
from .symbols import (InteriorSymbol, BoundaryComponent, BoundaryRow,
                      BoundaryOperatorSpec)
from . import io as _io

__all__ = [
    "FIXTURE_NAMES",
    "fixture_description",
    "load_fixture",
    "fixture_document",
    "catalysis_problem",
    "mixed_rows_problem",
]


def _heat_interior(d=None):
    mat = np.eye(1) if d is None else np.diag(np.asarray(d, dtype=float))
    N = mat.shape[0]
    return InteriorSymbol(order=2, dim=2, coeffs={(2, 0): mat, (0, 2): mat})


def _dirichlet_row(N=1):
    eye = np.eye(N)
    return BoundaryRow([BoundaryComponent(k=0, projection=eye,
                                          coeffs={(0, 0): eye}, dim=2)])


def _heat_dirichlet():
    return _heat_interior(), BoundaryOperatorSpec([_dirichlet_row()])


def _heat_neumann():
    # inward normal derivative d/dy, i.e. 1j times the D_y slot
    comp = BoundaryComponent(k=1, projection=np.eye(1),
                             coeffs={(0, 1): 1j * np.eye(1)}, dim=2)
    return _heat_interior(), BoundaryOperatorSpec([BoundaryRow([comp])])


def _heat_robin():
    # oblique first-order row: normal slot plus a 0.5 tangential drift
    comp = BoundaryComponent(k=1, projection=np.eye(1),
                             coeffs={(0, 1): np.eye(1),
                                     (1, 0): 0.5 * np.eye(1)}, dim=2)
    return _heat_interior(), BoundaryOperatorSpec([BoundaryRow([comp])])


def _biharmonic_interior():
    one = np.eye(1)
    return InteriorSymbol(order=4, dim=2, coeffs={(4, 0): one,
                                                  (2, 2): 2.0 * one,
                                                  (0, 4): one})


def _slope_row():
    comp = BoundaryComponent(k=1, projection=np.eye(1),
                             coeffs={(0, 1): 1j * np.eye(1)}, dim=2)
    return BoundaryRow([comp])


def _biharmonic():
    spec = BoundaryOperatorSpec([_dirichlet_row(), _slope_row()])
    return _biharmonic_interior(), spec


def _duplicate_row():
    spec = BoundaryOperatorSpec([_dirichlet_row(), _dirichlet_row()])
    return _biharmonic_interior(), spec


def _coupling_projections(alpha, flux_rows):
    """Oblique projections splitting a value row from flux rows.

    ``P0`` maps onto the common kernel of the flux functionals along
    ``ker(alpha)``; the flux rows are rebased through the inverse of
    the stacked functional matrix so they act inside ``ran(I - P0)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    rows = [np.asarray(r, dtype=float) for r in flux_rows]
    N = alpha.size
    if len(rows) != N - 1:
        raise ArgumentError("need %d flux rows for %d components"
                            % (N - 1, N))
    T = np.stack([alpha] + rows)
    if abs(np.linalg.det(T)) < 1e-12:
        raise ArgumentError("value and flux functionals are dependent")
    # w0 spans the common kernel of the flux rows
    w0 = np.linalg.solve(T, np.eye(N)[:, 0])
    denom = float(alpha @ w0)
    P0 = np.outer(w0, alpha) / denom
    P1 = np.eye(N) - P0
    C = np.linalg.solve(T, np.vstack([np.zeros((1, N)), rows]))
    return P0, P1, C


def catalysis_problem(d=(1.0, 2.0, 3.0), alpha=(1.0, 1.0, 1.0),
                      beta=(1.0, -2.0, 0.0), gamma=(1.0, 0.0, 3.0)):
    """Three diffusing components, one weighted value row, two flux rows.

    The boundary constraints are ``alpha . u = g0``, ``beta . du/dy =
    g1`` and ``gamma . du/dy = g2``, carried inside a single vector row
    by a rank-one value projection and its rank-two complement.
    """
    sym = _heat_interior(d)
    P0, P1, C = _coupling_projections(alpha, [beta, gamma])
    comp0 = BoundaryComponent(k=0, projection=P0, coeffs={(0, 0): P0}, dim=2)
    comp1 = BoundaryComponent(k=1, projection=P1, coeffs={(0, 1): 1j * C},
                              dim=2)
    spec = BoundaryOperatorSpec([BoundaryRow([comp0, comp1])])
    return sym, spec


def mixed_rows_problem(d=(1.0, 2.0), alpha=(1.0, 1.0), beta=(1.0, -1.0)):
    """Two components mixing a weighted value row with a weighted flux row.

    Constraints ``alpha . u = g0`` and ``beta . du/dy = g1``.
    """
    sym = _heat_interior(d)
    P0, P1, C = _coupling_projections(alpha, [beta])
    comp0 = BoundaryComponent(k=0, projection=P0, coeffs={(0, 0): P0}, dim=2)
    comp1 = BoundaryComponent(k=1, projection=P1, coeffs={(0, 1): 1j * C},
                              dim=2)
    spec = BoundaryOperatorSpec([BoundaryRow([comp0, comp1])])
    return sym, spec


_CATALOGUE = (
    ("heat-dirichlet", _heat_dirichlet,
     "scalar diffusion with a value row"),
    ("heat-neumann", _heat_neumann,
     "scalar diffusion with the inward normal-derivative row"),
    ("heat-robin", _heat_robin,
     "scalar diffusion with an oblique first-order row "
     "(normal plus tangential drift)"),
    ("biharmonic", _biharmonic,
     "fourth-order scalar problem with value and slope rows"),
    ("catalysis", catalysis_problem,
     "three-component system: weighted value row plus two flux rows"),
    ("mixed-two-component", mixed_rows_problem,
     "two-component system mixing a value row with a flux row"),
    ("duplicate-row", _duplicate_row,
     "degenerate control: the value row repeated, unique solvability "
     "fails"),
)

FIXTURE_NAMES = tuple(name for name, _, _ in _CATALOGUE)

_BY_NAME = {name: (builder, blurb) for name, builder, blurb in _CATALOGUE}


def fixture_description(name):
    """One-line description of a named fixture."""
    if name not in _BY_NAME:
        raise ArgumentError("unknown fixture %r; known: %s"
                            % (name, ", ".join(FIXTURE_NAMES)))
    return _BY_NAME[name][1]


def load_fixture(name):
    """Build ``(InteriorSymbol, BoundaryOperatorSpec)`` for a named fixture."""
    if name not in _BY_NAME:
        raise ArgumentError("unknown fixture %r; known: %s"
                            % (name, ", ".join(FIXTURE_NAMES)))
    return _BY_NAME[name][0]()


def fixture_document(name):
    """The problem-schema JSON document for a named fixture."""
    sym, bspec = load_fixture(name)
    return _io.problem_to_dict(sym, bspec, name=name,
                               description=fixture_description(name))
