"""Chart-based tensor calculus on tori and spheres.

Charts carry rectangular parameter boxes with per-axis periodicity, a metric
evaluator, and (for embedded spheres) the embedding map into Euclidean space.
Tensor fields hold componentwise grid values; derivatives are second order
central differences (periodic wrap or one-sided at boundaries), and operators
that accept a tolerance estimate their own discretization error by Richardson
comparison against the half-resolution grid.

Index conventions: an endomorphism field stores Phi[..., k, j] = Phi^k_j, a
connection stores Gamma[..., k, i, j] = Gamma^k_ij (symmetric in i, j for
Levi-Civita output), and the Nijenhuis output stores N[..., k, i, j].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateResult,
    DimensionMismatch,
    GridTooCoarse,
    NotAlmostComplex,
    NotUnitImaginary,
    SingularMetric,
)
from .octonion import (  # noqa: F401  (re-exported as part of this module's surface)
    associator,
    commutator,
    conjugate,
    multiplication_tensor,
    octonion_multiply,
)

__all__ = [
    "Chart",
    "ChartAtlas",
    "MetricField",
    "AlmostComplexField",
    "ConnectionField",
    "VectorField",
    "TensorField",
    "flat_torus_atlas",
    "sphere_atlas",
    "transition_consistency",
    "metric_field",
    "constant_structure",
    "block_rotation",
    "cayley_structure",
    "cayley_values",
    "cayley_field",
    "sphere_embedding_jacobian",
    "partial_derivatives",
    "covariant_endomorphism_derivative",
    "levi_civita",
    "christoffel_pointwise",
    "nijenhuis_coordinate",
    "nijenhuis_pointwise",
    "nijenhuis_bracket",
    "vector_bracket",
    "nijenhuis_norm",
    "endomorphism_norm",
    "project_metric",
    "fundamental_two_form",
    "pfaffian",
    "save_field",
    "load_field",
    "octonion_multiply",
    "commutator",
    "associator",
    "conjugate",
    "multiplication_tensor",
]


# ----------------------------------------------------------------------------
# charts and atlases
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Chart:
    """One rectangular coordinate patch with metric and optional embedding."""

    name: str
    box: tuple
    periodic: tuple
    resolution: tuple
    metric_fn: object = None  # callable points (..., n) -> (..., n, n); None = flat
    embedding: object = None  # callable points (..., n) -> (..., m)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.box) == len(self.periodic) == len(self.resolution)):
            raise DimensionMismatch("box, periodic, and resolution lengths differ")

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def spacings(self) -> tuple:
        out = []
        for (lo, hi), per, n in zip(self.box, self.periodic, self.resolution):
            out.append((hi - lo) / n if per else (hi - lo) / (n - 1))
        return tuple(out)

    def axes(self) -> list:
        out = []
        for (lo, hi), per, n in zip(self.box, self.periodic, self.resolution):
            if per:
                out.append(lo + (hi - lo) / n * np.arange(n))
            else:
                out.append(np.linspace(lo, hi, n))
        return out

    def grid(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def metric_values(self) -> np.ndarray:
        pts = self.grid()
        if self.metric_fn is None:
            eye = np.eye(self.dim)
            return np.broadcast_to(eye, pts.shape[:-1] + eye.shape).copy()
        return np.asarray(self.metric_fn(pts), dtype=float)

    def quadrature_weights(self) -> np.ndarray:
        """Product trapezoid weights (plain node volume on periodic axes)."""
        axis_w = []
        for h, per, n in zip(self.spacings, self.periodic, self.resolution):
            if per:
                axis_w.append(np.full(n, h))
            else:
                w = np.full(n, h)
                w[0] = w[-1] = h / 2.0
                axis_w.append(w)
        mesh = np.meshgrid(*axis_w, indexing="ij")
        total = mesh[0].copy()
        for m in mesh[1:]:
            total *= m
        mask = self.meta.get("domain_radius")
        if mask is not None:
            total = total * (np.linalg.norm(self.grid(), axis=-1) <= mask)
        return total

    def refined(self) -> "Chart":
        res = tuple(2 * n if per else 2 * n - 1 for n, per in zip(self.resolution, self.periodic))
        return Chart(self.name, self.box, self.periodic, res, self.metric_fn, self.embedding, self.meta)

    def coarsened(self) -> "Chart":
        res = []
        for n, per in zip(self.resolution, self.periodic):
            if per:
                if n % 2:
                    raise ValueError("periodic resolution must be even to coarsen")
                res.append(n // 2)
            else:
                if n % 2 == 0:
                    raise ValueError("open-interval resolution must be odd to coarsen")
                res.append((n + 1) // 2)
        return Chart(self.name, self.box, self.periodic, tuple(res), self.metric_fn, self.embedding, self.meta)


@dataclass(frozen=True, eq=False)
class ChartAtlas:
    """A named manifold with its charts and coordinate transition maps."""

    manifold: str
    charts: tuple
    transitions: tuple = ()  # entries (i, j, map taking chart-i points to chart-j points)

    def transition(self, i: int, j: int):
        for a, b, fn in self.transitions:
            if (a, b) == (i, j):
                return fn
        raise KeyError(f"no transition {i} -> {j}")


def transition_consistency(atlas: ChartAtlas, n_samples: int = 200, seed: int = 0) -> float:
    """Largest round-trip residual of the atlas transition maps on random points."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i, j, fwd in atlas.transitions:
        try:
            back = atlas.transition(j, i)
        except KeyError:
            continue
        lo = np.array([b[0] for b in atlas.charts[i].box])
        hi = np.array([b[1] for b in atlas.charts[i].box])
        pts = lo + (hi - lo) * rng.random((n_samples, atlas.charts[i].dim))
        mapped = fwd(pts)
        lo_j = np.array([b[0] for b in atlas.charts[j].box])
        hi_j = np.array([b[1] for b in atlas.charts[j].box])
        ok = np.all((mapped >= lo_j) & (mapped <= hi_j), axis=-1)
        ok &= np.all(np.isfinite(mapped), axis=-1)
        if not ok.any():
            continue
        round_trip = back(mapped[ok])
        worst = max(worst, float(np.abs(round_trip - pts[ok]).max()))
    return worst


def flat_torus_atlas(dim: int, resolution, period: float = 2.0 * np.pi) -> ChartAtlas:
    """A flat torus as a single fully periodic chart with the identity metric."""
    res = (resolution,) * dim if np.isscalar(resolution) else tuple(resolution)
    chart = Chart(
        name=f"torus{dim}",
        box=((0.0, float(period)),) * dim,
        periodic=(True,) * dim,
        resolution=res,
        metric_fn=None,
    )
    return ChartAtlas(manifold=f"T{dim}", charts=(chart,))


def _stereographic_embedding(ambient_signs: np.ndarray, param_signs: np.ndarray):
    def embed(points):
        x = np.asarray(points, dtype=float) * param_signs
        s = np.sum(x * x, axis=-1, keepdims=True)
        top = 2.0 * x / (1.0 + s)
        last = (1.0 - s) / (1.0 + s)
        return np.concatenate([top, last], axis=-1) * ambient_signs

    return embed


def _conformal_round_metric(points):
    x = np.asarray(points, dtype=float)
    s = np.sum(x * x, axis=-1)
    factor = 4.0 / (1.0 + s) ** 2
    eye = np.eye(x.shape[-1])
    return factor[..., None, None] * eye


def sphere_atlas(dim: int, resolution, box_radius: float = 1.25) -> ChartAtlas:
    """Round unit sphere S^dim as two stereographic charts.

    Chart 0 projects from the south pole, chart 1 from the north; chart 1
    flips its first coordinate so the transition y = r(x)/|x|^2 (with the
    reflection r) preserves orientation, keeping chart-wise top-form
    integrals directly summable.  Both charts share the conformal metric
    4 delta / (1 + |x|^2)^2 and integrate over the unit ball (the two balls
    partition the sphere up to the equator).
    """
    res = (resolution,) * dim if np.isscalar(resolution) else tuple(resolution)
    flip_param = np.ones(dim)
    flip_param[0] = -1.0
    plain_param = np.ones(dim)
    north_amb = np.ones(dim + 1)
    south_amb = np.ones(dim + 1)
    south_amb[-1] = -1.0

    def make(name, amb, par):
        return Chart(
            name=name,
            box=((-box_radius, box_radius),) * dim,
            periodic=(False,) * dim,
            resolution=res,
            metric_fn=_conformal_round_metric,
            embedding=_stereographic_embedding(amb, par),
            meta={"kind": "stereographic", "domain_radius": 1.0,
                  "ambient_signs": amb, "param_signs": par},
        )

    chart0 = make(f"sphere{dim}_n", north_amb, plain_param)
    chart1 = make(f"sphere{dim}_s", south_amb, flip_param)

    def inversion(points):
        x = np.asarray(points, dtype=float)
        s = np.sum(x * x, axis=-1, keepdims=True)
        out = x / s
        out = out.copy()
        out[..., 0] = -out[..., 0]
        return out

    return ChartAtlas(
        manifold=f"S{dim}",
        charts=(chart0, chart1),
        transitions=((0, 1, inversion), (1, 0, inversion)),
    )


def sphere_embedding_jacobian(chart: Chart, points: np.ndarray) -> np.ndarray:
    """Closed-form Jacobian (..., dim+1, dim) of a stereographic chart embedding."""
    if chart.meta.get("kind") != "stereographic":
        raise DimensionMismatch("chart is not a stereographic sphere chart")
    par = np.asarray(chart.meta["param_signs"], dtype=float)
    amb = np.asarray(chart.meta["ambient_signs"], dtype=float)
    x = np.asarray(points, dtype=float) * par
    n = x.shape[-1]
    s = np.sum(x * x, axis=-1)[..., None, None]
    eye = np.eye(n)
    top = 2.0 * eye / (1.0 + s) - 4.0 * x[..., :, None] * x[..., None, :] / (1.0 + s) ** 2
    last = -4.0 * x[..., None, :] / (1.0 + s) ** 2
    jac = np.concatenate([top, last], axis=-2)
    return amb[:, None] * jac * par[None, :]


# ----------------------------------------------------------------------------
# fields
# ----------------------------------------------------------------------------


def _check_grid_shape(chart: Chart, values: np.ndarray, index_rank: int, what: str):
    grid = tuple(chart.resolution)
    n = chart.dim
    expected = grid + (n,) * index_rank
    if values.shape != expected:
        raise DimensionMismatch(f"{what} values have shape {values.shape}, expected {expected}")


@dataclass(eq=False)
class TensorField:
    """Generic componentwise grid tensor (index layout documented per use)."""

    chart: Chart
    values: np.ndarray
    kind: str = "tensor"


@dataclass(eq=False)
class MetricField:
    chart: Chart
    values: np.ndarray  # (grid..., n, n) symmetric positive definite

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_grid_shape(self.chart, self.values, 2, "metric")

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.values)

    def determinant(self) -> np.ndarray:
        return np.linalg.det(self.values)


@dataclass(eq=False)
class AlmostComplexField:
    chart: Chart
    values: np.ndarray  # (grid..., k, j) = Phi^k_j
    source: str = "user"
    almost_complex: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_grid_shape(self.chart, self.values, 2, "endomorphism")
        if self.almost_complex:
            res = self.square_residual()
            if res > 1e-8:
                raise NotAlmostComplex(f"Phi^2 + Id deviates by {res:.3e} on the grid")

    def square_residual(self) -> float:
        sq = np.einsum("...km,...mj->...kj", self.values, self.values)
        return float(np.abs(sq + np.eye(self.chart.dim)).max())


@dataclass(eq=False)
class ConnectionField:
    chart: Chart
    values: np.ndarray  # (grid..., k, i, j) = Gamma^k_ij, units 1/length
    compatibility_residual: float = float("nan")

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_grid_shape(self.chart, self.values, 3, "connection")

    def torsion(self) -> np.ndarray:
        return self.values - np.swapaxes(self.values, -1, -2)


@dataclass(eq=False)
class VectorField:
    chart: Chart
    values: np.ndarray  # (grid..., k)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_grid_shape(self.chart, self.values, 1, "vector")


def metric_field(chart: Chart) -> MetricField:
    return MetricField(chart, chart.metric_values())


def block_rotation(dim: int) -> np.ndarray:
    """The standard constant structure: a 90-degree rotation in each 2-plane."""
    if dim % 2:
        raise DimensionMismatch("a complex structure needs even dimension")
    J = np.zeros((dim, dim))
    for p in range(dim // 2):
        J[2 * p, 2 * p + 1] = -1.0
        J[2 * p + 1, 2 * p] = 1.0
    return J


def constant_structure(chart: Chart, J0: np.ndarray | None = None, source: str = "user") -> AlmostComplexField:
    J0 = block_rotation(chart.dim) if J0 is None else np.asarray(J0, dtype=float)
    values = np.broadcast_to(J0, tuple(chart.resolution) + J0.shape).copy()
    return AlmostComplexField(chart, values, source=source)


# ----------------------------------------------------------------------------
# octonions and the Cayley structure
# ----------------------------------------------------------------------------


def cayley_structure(x) -> np.ndarray:
    """Left multiplication by a unit imaginary octonion, projected to x-perp.

    Input is an 8-vector with vanishing real part or a bare 7-vector of
    imaginary components; output is the 7x7 matrix acting on imaginary
    coordinates.  On tangent vectors of the unit sphere at x it squares to
    -Id and preserves the Euclidean inner product.
    """
    x = np.asarray(x, dtype=float)
    if x.shape == (8,):
        if abs(x[0]) > 1e-10:
            raise NotUnitImaginary(f"real part {x[0]:.3e} is not zero")
        xi = x[1:]
    elif x.shape == (7,):
        xi = x
    else:
        raise NotUnitImaginary("expected a 7- or 8-component octonion")
    norm = float(np.linalg.norm(xi))
    if abs(norm - 1.0) > 1e-10:
        raise NotUnitImaginary(f"|x| = {norm:.12f} is not 1")
    T = multiplication_tensor()[1:, 1:, 1:]
    L = np.einsum("kij,i->kj", T, xi)
    return L - np.outer(xi, xi @ L)


def cayley_values(chart: Chart, points: np.ndarray) -> np.ndarray:
    """Chart components of the octonion structure at the given S^6 points."""
    if chart.dim != 6:
        raise DimensionMismatch("the octonion structure lives on six-dimensional spheres")
    points = np.asarray(points, dtype=float)
    p = chart.embedding(points)
    jac = sphere_embedding_jacobian(chart, points)
    T = multiplication_tensor()[1:, 1:, 1:]
    L = np.einsum("kij,...i->...kj", T, p)
    # project the ambient action onto the tangent plane at p
    M = L - p[..., :, None] * np.einsum("...i,...ij->...j", p, L)[..., None, :]
    s = np.sum(points * points, axis=-1)[..., None, None]
    pinv = (1.0 + s) ** 2 / 4.0 * np.swapaxes(jac, -1, -2)
    return np.einsum("...ka,...ab,...bj->...kj", pinv, M, jac, optimize=True)


def cayley_field(chart: Chart) -> AlmostComplexField:
    return AlmostComplexField(chart, cayley_values(chart, chart.grid()), source="cayley")


# ----------------------------------------------------------------------------
# finite differences and connections
# ----------------------------------------------------------------------------


def partial_derivatives(values: np.ndarray, chart: Chart) -> np.ndarray:
    """Stack of grid partials; the derivative index comes right after the grid axes.

    Input shape (grid..., extra...); output (grid..., dim, extra...), second
    order accurate (periodic wrap or one-sided boundary stencils).
    """
    outs = []
    for a in range(chart.dim):
        h = chart.spacings[a]
        if chart.periodic[a]:
            outs.append((np.roll(values, -1, axis=a) - np.roll(values, 1, axis=a)) / (2.0 * h))
        else:
            outs.append(np.gradient(values, h, axis=a, edge_order=2))
    return np.stack(outs, axis=chart.dim)


def _christoffel_from_samples(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Christoffel symbols from metric values g (..., i, j) and partials dg (..., a, i, j).

    dg[a, i, j] = d_a g_ij; output Gamma^k_ij = g^kl (d_i g_jl + d_j g_il - d_l g_ij) / 2.
    """
    ginv = np.linalg.inv(g)
    term1 = dg  # [i, j, l] = d_i g_jl
    term2 = np.swapaxes(dg, -3, -2)  # [i, j, l] = d_j g_il
    term3 = np.moveaxis(dg, -3, -1)  # [i, j, l] = d_l g_ij
    bracket = term1 + term2 - term3
    return 0.5 * np.einsum("...kl,...ijl->...kij", ginv, bracket)


def levi_civita(g: MetricField) -> ConnectionField:
    """Levi-Civita connection by central differences of the metric grid.

    Torsion vanishes identically by the symmetrized construction; the
    metric-compatibility residual max |nabla g| is reported on the field and
    shrinks as O(h^2) under refinement.
    """
    det = g.determinant()
    if float(det.min()) < 1e-12:
        raise SingularMetric(f"metric determinant drops to {det.min():.3e}")
    dg = partial_derivatives(g.values, g.chart)
    gamma = _christoffel_from_samples(g.values, dg)
    # nabla_a g_ij = d_a g_ij - Gamma^l_ai g_lj - Gamma^l_aj g_il
    nabla = (
        dg
        - np.einsum("...lai,...lj->...aij", gamma, g.values)
        - np.einsum("...laj,...il->...aij", gamma, g.values)
    )
    return ConnectionField(g.chart, gamma, compatibility_residual=float(np.abs(nabla).max()))


def christoffel_pointwise(metric_fn, points: np.ndarray, spacing: float) -> np.ndarray:
    """Christoffel symbols at isolated points via local finite-difference stencils."""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    g0 = np.asarray(metric_fn(points), dtype=float)
    det = np.linalg.det(g0)
    if float(det.min()) < 1e-12:
        raise SingularMetric(f"metric determinant drops to {det.min():.3e}")
    dg = np.empty(points.shape[:-1] + (n, n, n))
    for a in range(n):
        step = np.zeros(n)
        step[a] = spacing
        gp = np.asarray(metric_fn(points + step), dtype=float)
        gm = np.asarray(metric_fn(points - step), dtype=float)
        dg[..., a, :, :] = (gp - gm) / (2.0 * spacing)
    return _christoffel_from_samples(g0, dg)


def covariant_endomorphism_derivative(
    phi: np.ndarray, dphi: np.ndarray, gamma: np.ndarray | None
) -> np.ndarray:
    """D[..., l, k, j] = d_l Phi^k_j + Gamma^k_lm Phi^m_j - Gamma^m_lj Phi^k_m."""
    D = dphi
    if gamma is not None:
        D = (
            D
            + np.einsum("...klm,...mj->...lkj", gamma, phi)
            - np.einsum("...mlj,...km->...lkj", gamma, phi)
        )
    return D


def _nijenhuis_from_parts(phi: np.ndarray, D: np.ndarray) -> np.ndarray:
    # A[k, l, j] = D_l Phi^k_j - D_j Phi^k_l  (antisymmetric in l, j)
    A = np.einsum("...lkj->...klj", D) - np.einsum("...jkl->...klj", D)
    return np.einsum("...li,...klj->...kij", phi, A) - np.einsum(
        "...lj,...kli->...kij", phi, A
    )


def nijenhuis_coordinate(
    phi: AlmostComplexField, connection: ConnectionField, tolerance: float | None = None
) -> TensorField:
    """Chart Nijenhuis operator of an endomorphism field.

    N^k_ij = Phi^l_i (D_l Phi^k_j - D_j Phi^k_l) - Phi^l_j (D_l Phi^k_i - D_i Phi^k_l)
    with D the covariant derivative of the supplied connection.  When a
    tolerance is given the same quantity is recomputed on the half-resolution
    grid and a Richardson error estimate above the tolerance raises
    :class:`GridTooCoarse`.
    """
    if phi.chart.resolution != connection.chart.resolution:
        raise DimensionMismatch("endomorphism and connection live on different grids")
    chart = phi.chart
    dphi = partial_derivatives(phi.values, chart)
    D = covariant_endomorphism_derivative(phi.values, dphi, connection.values)
    N = _nijenhuis_from_parts(phi.values, D)
    if tolerance is not None:
        coarse_chart = chart.coarsened()
        sl = (slice(None, None, 2),) * chart.dim
        coarse_phi = AlmostComplexField(
            coarse_chart, phi.values[sl], source=phi.source, almost_complex=False
        )
        coarse_conn = ConnectionField(coarse_chart, connection.values[sl])
        coarse_N = nijenhuis_coordinate(coarse_phi, coarse_conn, tolerance=None)
        est = float(np.abs(N[sl] - coarse_N.values).max()) / 3.0
        if est > tolerance:
            raise GridTooCoarse(
                f"Richardson error estimate {est:.3e} exceeds tolerance {tolerance:g}"
            )
    return TensorField(chart, N, kind="nijenhuis")


def nijenhuis_pointwise(
    phi_fn,
    metric_fn,
    points: np.ndarray,
    spacing: float,
    tolerance: float | None = None,
) -> np.ndarray:
    """Chart Nijenhuis tensor at isolated points via local stencils.

    ``phi_fn`` maps points (..., n) to endomorphism values (..., n, n);
    ``metric_fn`` may be None for a flat chart (connection-free evaluation).
    Central differences use 2n extra evaluation points per sample; a given
    tolerance triggers a doubled-spacing Richardson check.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    phi0 = np.asarray(phi_fn(points), dtype=float)
    dphi = np.empty(points.shape[:-1] + (n, n, n))
    for a in range(n):
        step = np.zeros(n)
        step[a] = spacing
        pp = np.asarray(phi_fn(points + step), dtype=float)
        pm = np.asarray(phi_fn(points - step), dtype=float)
        dphi[..., a, :, :] = (pp - pm) / (2.0 * spacing)
    gamma = None if metric_fn is None else christoffel_pointwise(metric_fn, points, spacing)
    D = covariant_endomorphism_derivative(phi0, dphi, gamma)
    N = _nijenhuis_from_parts(phi0, D)
    if tolerance is not None:
        coarse = nijenhuis_pointwise(phi_fn, metric_fn, points, 2.0 * spacing, tolerance=None)
        est = float(np.abs(N - coarse).max()) / 3.0
        if est > tolerance:
            raise GridTooCoarse(
                f"Richardson error estimate {est:.3e} exceeds tolerance {tolerance:g}"
            )
    return N


def vector_bracket(u: VectorField, v: VectorField) -> VectorField:
    """Lie bracket [u, v]^k = u^l d_l v^k - v^l d_l u^k by central differences."""
    chart = u.chart
    du = partial_derivatives(u.values, chart)
    dv = partial_derivatives(v.values, chart)
    vals = np.einsum("...l,...lk->...k", u.values, dv) - np.einsum(
        "...l,...lk->...k", v.values, du
    )
    return VectorField(chart, vals)


def nijenhuis_bracket(
    J: AlmostComplexField, u: VectorField, v: VectorField, tolerance: float | None = None
) -> VectorField:
    """Bracket-form Nijenhuis field N(u, v) = [Ju, Jv] - [u, v] - J[u, Jv] - J[Ju, v].

    The sign convention is the one matching :func:`nijenhuis_coordinate`
    exactly (for torsion-free connections and Phi^2 = -Id the two agree
    componentwise up to O(h^2)).
    """
    chart = J.chart

    def apply_J(w):
        return VectorField(chart, np.einsum("...kl,...l->...k", J.values, w.values))

    Ju, Jv = apply_J(u), apply_J(v)
    vals = (
        vector_bracket(Ju, Jv).values
        - vector_bracket(u, v).values
        - apply_J(vector_bracket(u, Jv)).values
        - apply_J(vector_bracket(Ju, v)).values
    )
    if tolerance is not None:
        coarse_chart = chart.coarsened()
        sl = (slice(None, None, 2),) * chart.dim
        cJ = AlmostComplexField(coarse_chart, J.values[sl], almost_complex=False)
        cu, cv = VectorField(coarse_chart, u.values[sl]), VectorField(coarse_chart, v.values[sl])
        coarse = nijenhuis_bracket(cJ, cu, cv, tolerance=None)
        est = float(np.abs(vals[sl] - coarse.values).max()) / 3.0
        if est > tolerance:
            raise GridTooCoarse(
                f"Richardson error estimate {est:.3e} exceeds tolerance {tolerance:g}"
            )
    return VectorField(chart, vals)


# ----------------------------------------------------------------------------
# norms and metric projection
# ----------------------------------------------------------------------------


def nijenhuis_norm(values: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Pointwise metric norm of a (k, i, j) tensor: lower k, raise i and j."""
    ginv = np.linalg.inv(metric)
    sq = np.einsum(
        "...kij,...pqr,...kp,...iq,...jr->...", values, values, metric, ginv, ginv,
        optimize=True
    )
    return np.sqrt(np.maximum(sq, 0.0))


def endomorphism_norm(values: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Pointwise metric norm of an endomorphism: |M|^2 = M^i_j M^p_q g_ip g^jq."""
    ginv = np.linalg.inv(metric)
    sq = np.einsum("...ij,...pq,...ip,...jq->...", values, values, metric, ginv, optimize=True)
    return np.sqrt(np.maximum(sq, 0.0))


def project_metric(g_raw: MetricField, J: AlmostComplexField) -> MetricField:
    """Average a metric into J-orthogonal form: g = (g_raw + J^T g_raw J) / 2."""
    sq = np.einsum("...km,...mj->...kj", J.values, J.values)
    if float(np.abs(sq + np.eye(J.chart.dim)).max()) > 1e-8:
        raise NotAlmostComplex("the averaging needs Phi^2 = -Id at every node")
    pulled = np.einsum("...ai,...ab,...bj->...ij", J.values, g_raw.values, J.values, optimize=True)
    out = 0.5 * (g_raw.values + pulled)
    eigs = np.linalg.eigvalsh(out)
    if float(eigs.min()) <= 0.0:
        raise DegenerateResult(
            f"projected metric loses positive definiteness (min eigenvalue {eigs.min():.3e})"
        )
    return MetricField(g_raw.chart, out)


# ----------------------------------------------------------------------------
# the fundamental two-form and wedge powers
# ----------------------------------------------------------------------------


def pfaffian(a: np.ndarray) -> np.ndarray:
    """Pfaffian of antisymmetric matrices (..., 2m, 2m) by minor expansion."""
    n = a.shape[-1]
    if n % 2:
        raise DimensionMismatch("the Pfaffian needs even size")
    if n == 0:
        return np.ones(a.shape[:-2])
    if n == 2:
        return a[..., 0, 1]
    total = np.zeros(a.shape[:-2])
    rest = list(range(1, n))
    for pos, j in enumerate(rest):
        keep = [k for k in rest if k != j]
        minor = a[..., keep, :][..., :, keep]
        total = total + (-1.0) ** pos * a[..., 0, j] * pfaffian(minor)
    return total


@dataclass(eq=False)
class TwoFormReport:
    omega: TensorField
    top_wedge: float
    max_d_omega: float


def fundamental_two_form(g: MetricField, J: AlmostComplexField) -> TwoFormReport:
    """The two-form omega(u, v) = g(Ju, v), its top wedge integral, and max |d omega|.

    The wedge integral covers this chart's integration domain (the whole box
    for a torus chart, the unit ball for a stereographic chart), so atlas
    totals are sums of chart reports.  d omega is formed by finite
    differences and measured in the pointwise metric norm.
    """
    chart = g.chart
    n = chart.dim
    if n % 2:
        raise DimensionMismatch("the top wedge power needs even dimension")
    omega = np.einsum("...ki,...kj->...ij", J.values, g.values)
    anti = float(np.abs(omega + np.swapaxes(omega, -1, -2)).max())
    if anti > 1e-8:
        raise DegenerateResult(
            f"omega fails antisymmetry by {anti:.3e}: J is not g-orthogonal"
        )
    m = n // 2
    weights = chart.quadrature_weights()
    top = float(np.sum(weights * math.factorial(m) * pfaffian(omega)))
    dom = partial_derivatives(omega, chart)  # (..., a, i, j) = d_a omega_ij
    d_omega = (
        dom
        - np.einsum("...iaj->...aij", dom)
        + np.einsum("...jai->...aij", dom)
    )
    ginv = np.linalg.inv(g.values)
    sq = np.einsum(
        "...aij,...bkl,...ab,...ik,...jl->...", d_omega, d_omega, ginv, ginv, ginv, optimize=True
    )
    norms = np.sqrt(np.maximum(sq, 0.0))
    mask = weights > 0
    max_d = float(norms[mask].max()) if mask.any() else float(norms.max())
    return TwoFormReport(
        omega=TensorField(chart, omega, kind="two_form"),
        top_wedge=top,
        max_d_omega=max_d,
    )


# ----------------------------------------------------------------------------
# serialization: flat binary arrays with a JSON header
# ----------------------------------------------------------------------------


def save_field(field_obj, path, units: str = "dimensionless"):
    """Write a grid field as a one-line JSON header followed by raw array bytes."""
    values = np.ascontiguousarray(field_obj.values)
    header = {
        "chart": field_obj.chart.name,
        "kind": getattr(field_obj, "kind", type(field_obj).__name__),
        "shape": list(values.shape),
        "dtype": str(values.dtype),
        "strides": list(values.strides),
        "units": units,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(values.tobytes())


def load_field(path):
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line.decode("utf-8"))
        raw = fh.read()
    values = np.frombuffer(raw, dtype=np.dtype(header["dtype"])).reshape(header["shape"])
    return header, values.copy()
