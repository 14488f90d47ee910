"""Clamped polyharmonic and buckling eigenvalues of geodesic balls.

Both problems are discretized with radial Hermite finite elements in the geodesic
coordinate ``t``: piecewise polynomials of degree ``2l+1`` carrying the nodal
values ``f, f', ..., f^(l)``, hence ``C^l`` and conforming for the order-``2l``
quotient.  Regularity at the center kills the odd derivatives there; clamping
kills ``f, ..., f^(l-1)`` at ``t = R``.  The discrete minimum is therefore an
upper bound for the radial first eigenvalue that decreases under nested
refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sps

from .errors import FitFailure, MeshTooCoarse
from .geometry import to_geodesic
from .plap import DEFAULT_SCHEDULE, extrapolate_limit
from .radialsolve import EigenResult, iterated_laplacian_jet, smallest_generalized_eigen

MIN_MESH = 64
ELEMENT_SIZE = 0.25
# relative change between mesh and mesh/2 above which the mesh is declared too coarse
MESH_TOL = 1e-3
# roundoff allowance when asserting that refinement does not raise the minimum
# (nodal Hermite pencils of order 2l carry an h^(-2l) condition number)
MONOTONE_SLACK = 1e-5


@dataclass(frozen=True)
class ClampedTask:
    metric: object
    R: float
    l: int
    mesh: int | None = None

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 1:
            raise ValueError(f"l must be a positive integer, got {self.l}")
        if not self.R > 0:
            raise ValueError(f"radius must be positive, got {self.R}")
        if self.mesh is not None and self.mesh < MIN_MESH:
            raise ValueError(f"mesh must have at least {MIN_MESH} elements, got {self.mesh}")

    @property
    def elements(self):
        return self.mesh if self.mesh is not None else default_mesh(self.R)


def default_mesh(R):
    m = max(MIN_MESH, math.ceil(R / ELEMENT_SIZE))
    return m + (m % 2)


@lru_cache(maxsize=None)
def _hermite_reference(l):
    """Monomial coefficients (columns) of the degree-``2l+1`` Hermite basis on [0, 1].

    Basis column ``e*(l+1)+j`` has unit ``j``-th derivative at endpoint ``e``.
    """
    d = 2 * l + 1
    V = np.zeros((d + 1, d + 1))
    for e, x in enumerate((0.0, 1.0)):
        for j in range(l + 1):
            row = e * (l + 1) + j
            for k in range(j, d + 1):
                V[row, k] = math.perm(k, j) * x ** (k - j)
    return np.linalg.inv(V)


def _reference_jets(l, xi):
    """Derivatives (w.r.t. the reference variable) of the Hermite basis at ``xi``.

    Returns shape ``(l+1, 2l+2, len(xi))``.
    """
    C = _hermite_reference(l)
    d = 2 * l + 1
    out = np.empty((l + 1, d + 1, xi.size))
    for k in range(l + 1):
        powers = np.zeros((d + 1, xi.size))
        for i in range(k, d + 1):
            powers[i] = math.perm(i, k) * xi ** (i - k)
        out[k] = C.T @ powers
    return out


def _assemble(metric, R, elements, l, kind):
    """Global stiffness/mass pair (sparse, constrained dofs removed)."""
    order = l if kind != "buckling" else 2
    herm = max(l, 2) if kind == "buckling" else l
    # buckling uses C^1 cubic Hermite (l = 1 clamped conditions f(R) = f'(R) = 0) is not
    # conforming for Delta f; use the C^2 quintic space with f''(R) free instead
    nodes_per = herm + 1
    ng = 2 * herm + 4
    gx, gw = np.polynomial.legendre.leggauss(ng)
    xi = 0.5 * (gx + 1.0)
    ref = _reference_jets(herm, xi)
    t_nodes = np.linspace(0.0, R, elements + 1)
    h = R / elements
    wscale = float(metric.volume_weight(np.array([R]))[0])

    nb = 2 * nodes_per
    rows, cols, avals, bvals = [], [], [], []
    dof_of = np.arange(nb)
    # physical scaling of basis derivatives: dof j, derivative k -> h^(j-k)
    jdof = np.tile(np.arange(nodes_per), 2)
    for e in range(elements):
        ta = t_nodes[e]
        tq = ta + h * xi
        jets = np.empty((order + 1, nb, ng))
        for k in range(order + 1):
            jets[k] = ref[k] * (h ** (jdof - k))[:, None]
        w = metric.volume_weight(tq) / wscale * gw * (0.5 * h)
        if kind == "buckling":
            stiff = _laplacian_rows(metric, tq, jets, 1)[0]
            mass = jets[1]
        else:
            m, odd = divmod(l, 2)
            lap = _laplacian_rows(metric, tq, jets, m) if m else jets
            stiff = lap[1] if odd else lap[0]
            mass = jets[0]
        Ae = (stiff * w) @ stiff.T
        Be = (mass * w) @ mass.T
        gidx = e * nodes_per + dof_of
        r, c = np.meshgrid(gidx, gidx, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        avals.append(Ae.ravel())
        bvals.append(Be.ravel())
    N = (elements + 1) * nodes_per
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    A = sps.csr_matrix((np.concatenate(avals), (rows, cols)), shape=(N, N))
    B = sps.csr_matrix((np.concatenate(bvals), (rows, cols)), shape=(N, N))

    clamp = l if kind != "buckling" else 2
    fixed = [j for j in range(1, nodes_per, 2)]  # odd derivatives at the center
    fixed += [elements * nodes_per + j for j in range(clamp)]
    keep = np.setdiff1d(np.arange(N), fixed)
    A = A[keep][:, keep]
    B = B[keep][:, keep]
    return A, B


def _laplacian_rows(metric, tq, jets, m):
    order = jets.shape[0] - 1
    lo = max(order - 2, 0)
    a = metric.a_jet(tq, lo)[:, None, :]
    b = metric.b_jet(tq, lo)[:, None, :]
    return iterated_laplacian_jet(a, b, jets, m)


def _solve(metric, R, elements, l, kind, tol):
    A, B = _assemble(metric, R, elements, l, kind)
    return smallest_generalized_eigen(A, B, tol=tol)


def _with_mesh_check(metric, R, elements, l, kind, tol, check_mesh):
    fine = _solve(metric, R, elements, l, kind, tol)
    diag = f"{kind} l={l} R={R:g} elements={elements} {fine.diagnostics}"
    if check_mesh:
        coarse = _solve(metric, R, elements // 2, l, kind, tol).value
        change = (coarse - fine.value) / fine.value
        diag += f" coarse={coarse:.12g} refinement_change={change:.3g}"
        if change < -MONOTONE_SLACK:
            raise MeshTooCoarse(f"refinement increased the discrete minimum ({diag})")
        if change > MESH_TOL:
            raise MeshTooCoarse(f"refinement changed the eigenvalue by {change:.3g} ({diag})")
    return EigenResult(fine.value, fine.residual, elements, False, diag)


def clamped_eigenvalue(task, tol=1e-10, check_mesh=True):
    """First clamped eigenvalue of ``(-Delta)^l`` on the ball ``B_R`` (radial, upper bound)."""
    metric = to_geodesic(task.metric)
    elements = task.elements
    return _with_mesh_check(metric, float(task.R), elements, int(task.l), "clamped", tol, check_mesh)


def buckling_eigenvalue(metric, R, mesh=None, tol=1e-10, check_mesh=True):
    """First buckling eigenvalue ``min int|Delta f|^2 / int|grad f|^2`` on ``B_R``."""
    if mesh is not None and mesh < MIN_MESH:
        raise ValueError(f"mesh must have at least {MIN_MESH} elements, got {mesh}")
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    metric = to_geodesic(metric)
    elements = mesh if mesh is not None else default_mesh(R)
    return _with_mesh_check(metric, float(R), elements, 2, "buckling", tol, check_mesh)


def _parse_problem(l_or_buckling):
    if isinstance(l_or_buckling, str):
        if l_or_buckling.lower() in ("b", "buckling"):
            return "buckling"
        return int(l_or_buckling)
    return int(l_or_buckling)


def polyharm_schedule(metric, l_or_buckling, R_schedule=DEFAULT_SCHEDULE, tol=1e-10, check_mesh=True):
    problem = _parse_problem(l_or_buckling)
    out = []
    for R in sorted(float(r) for r in R_schedule):
        if problem == "buckling":
            out.append(buckling_eigenvalue(metric, R, tol=tol, check_mesh=check_mesh))
        else:
            out.append(clamped_eigenvalue(ClampedTask(metric, R, problem), tol=tol, check_mesh=check_mesh))
    return out


def polyharm_limit(metric, l_or_buckling, R_schedule=DEFAULT_SCHEDULE, tol=1e-10, return_values=False):
    """Extrapolated large-ball limit of the clamped (integer ``l``) or buckling eigenvalue."""
    radii = sorted(float(r) for r in R_schedule)
    if len(radii) < 4:
        raise FitFailure("need at least 4 radii")
    values = [r.value for r in polyharm_schedule(metric, l_or_buckling, radii, tol)]
    limit, quality, _ = extrapolate_limit(radii, values)
    if quality > 0.1:
        raise FitFailure(f"extrapolation residual {quality:.3g} exceeds 10%")
    if return_values:
        return limit, quality, radii, values
    return limit, quality
