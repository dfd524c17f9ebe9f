"""Fiber Fourier expansion over circle bundles and its large-scale reduction.

The centerpiece is the circle-fibered three-sphere over the projective line:
the total space is the sphere |z|^2 + |v|^2 = lam^-2 in C^2, the circle acts
by the phase e^{i lam t} with t in [0, 2pi/lam), and the base is covered by
two affine charts (coordinate a and its reciprocal).  Sections of a trivial
auxiliary bundle restrict to functions on the total space; expanding them
along each fiber gives mode fields over the base whose k-th mode scales like
lam^-k.  The reduction keeps the fiber-average (ground) mode and tabulates
how every other mode dies as lam grows.

Fiber transforms use the uniform trapezoid rule on the circle, the same
quadrature the circle chart in :mod:`fibervac.group_harmonics` uses, so the
two implementations agree node for node.  Local sections store a fiber phase
per base chart; pullback errors are reported in sup norm and in the
sup-plus-first-derivative norm, the latter excluding a small disk around each
section singularity (default radius: three grid cells).  The comparison
constant is obtained by maximizing the lam-independent part of the mode
fields and their grid derivatives over the same masked grids.

The fourteen-dimensional companion: a one-parameter family of left-invariant
squashed metrics on the rank-two exceptional group, diagonal in the root
basis, whose eight vertical directions carry lam^-1/4 factors.  The
horizontal vacuum check restricts a block-diagonal orthogonal structure to
the six-dimensional complement and evaluates the integrability and potential
terms from structure constants alone, which is exact for left-invariant data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import tensor_geometry as tg
from .energy_theory import nijenhuis_from_constants
from .errors import (
    NotBlockDiagonal,
    QuadratureUnderresolved,
    SectionUnbounded,
    ZeroCoupling,
)
from .group_harmonics import Irrep, circle_chart
from .lie_core import (
    SamelsonStructure,
    SubalgebraEmbedding,
    blockdiagonal_check,
    build_algebra,
    embed_su3_in_g2,
)

__all__ = [
    "PrincipalBundleSpec",
    "BundleField",
    "ModeFields",
    "ReductionResult",
    "LocalSection",
    "PullbackErrorTable",
    "SquashedMetric",
    "hopf_bundle",
    "hopf_project",
    "hopf_ambient_field",
    "field_from_evaluator",
    "hopf_mode_closed_form",
    "hopf_section",
    "hopf_bound_constant",
    "conjugate_field",
    "fiber_fourier_modes",
    "reduce",
    "section_pullback_error",
    "squashed_metric",
    "g2_reduction_check",
]


# ----------------------------------------------------------------------------
# bundle specifications
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PrincipalBundleSpec:
    """A circle bundle presented through per-chart trivializations.

    ``trivializations`` pairs each base chart with the fiber group chart used
    over it; ``embedding(tag, base_points, t)`` maps trivialization data to
    the ambient total space; ``rebuild(lam)`` produces the same bundle at a
    different scale, which is how reductions re-sample fields.
    """

    base: tg.ChartAtlas
    fiber_group: str
    lam: float
    trivializations: tuple
    embedding: object
    fiber_volume: float
    rebuild: object = None

    @property
    def chart_names(self) -> tuple:
        return tuple(ch.name for ch in self.base.charts)

    def chart(self, tag: str) -> tg.Chart:
        for ch in self.base.charts:
            if ch.name == tag:
                return ch
        raise KeyError(f"no base chart named {tag!r}")

    def fiber_chart(self, tag: str):
        for ch, fib in self.trivializations:
            if ch.name == tag:
                return fib
        raise KeyError(f"no trivialization over {tag!r}")

    def fiber_points(self, n: int) -> np.ndarray:
        """Uniform trapezoid nodes along one fiber period."""
        return (2.0 * np.pi / self.lam) * np.arange(n) / n


def _complex_coord(pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    return pts[..., 0] + 1j * pts[..., 1]


def _hopf_embedding(lam: float):
    def embed(tag, base_pts, t):
        c = _complex_coord(base_pts)
        t = np.asarray(t, dtype=float)
        phase = np.exp(1j * lam * t) / (lam * np.sqrt(1.0 + np.abs(c) ** 2))
        out = np.empty(np.broadcast_shapes(c.shape, t.shape) + (2,), dtype=complex)
        if tag == "cp1_a":
            out[..., 0] = phase
            out[..., 1] = c * phase
        elif tag == "cp1_b":
            out[..., 0] = c * phase
            out[..., 1] = phase
        else:
            raise KeyError(f"unknown chart tag {tag!r}")
        return out

    return embed


def _cp1_invert(pts: np.ndarray) -> np.ndarray:
    # reciprocal coordinate: b = 1/a, taken on the conjugate pair (x, -y)
    pts = np.asarray(pts, dtype=float)
    s = pts[..., 0] ** 2 + pts[..., 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.stack([pts[..., 0] / s, -pts[..., 1] / s], axis=-1)
    return out


def _polyline_circumference(points: np.ndarray) -> float:
    d = np.diff(points, axis=0)
    return float(np.sqrt((np.abs(d) ** 2).sum(axis=-1)).sum())


def _measured_fiber_volume(embed, tag, base_pt, lam) -> float:
    # chord-length sums at three resolutions, extrapolated twice; removes the
    # n^-2 and n^-4 terms of the inscribed-polygon defect
    sums = []
    for n in (256, 512, 1024):
        t = (2.0 * np.pi / lam) * np.arange(n + 1) / n
        sums.append(_polyline_circumference(embed(tag, base_pt, t)))
    r1 = (4.0 * sums[1] - sums[0]) / 3.0
    r2 = (4.0 * sums[2] - sums[1]) / 3.0
    return (16.0 * r2 - r1) / 15.0


def hopf_bundle(lam: float, resolution: int = 41, n_fiber: int = 64) -> PrincipalBundleSpec:
    """The circle-fibered three-sphere of radius 1/lam over two affine charts.

    Each base chart covers the box [-1, 1]^2; the reciprocal-coordinate
    transition identifies the annuli where both apply.  The measured fiber
    circumference is checked against the group volume 2 pi / lam.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    box = ((-1.0, 1.0), (-1.0, 1.0))
    res = (int(resolution),) * 2
    charts = (
        tg.Chart(name="cp1_a", box=box, periodic=(False, False), resolution=res),
        tg.Chart(name="cp1_b", box=box, periodic=(False, False), resolution=res),
    )
    atlas = tg.ChartAtlas(
        manifold="cp1",
        charts=charts,
        transitions=((0, 1, _cp1_invert), (1, 0, _cp1_invert)),
    )
    embed = _hopf_embedding(lam)
    volume = 2.0 * np.pi / lam
    for tag, pt in (("cp1_a", np.array([0.37, -0.41])), ("cp1_b", np.array([0.12, 0.53]))):
        measured = _measured_fiber_volume(embed, tag, pt, lam)
        if abs(measured - volume) > 1e-10:
            raise ValueError(
                f"fiber volume over {tag} came out {measured!r}, expected {volume!r}"
            )
    fiber = circle_chart(lam)
    return PrincipalBundleSpec(
        base=atlas,
        fiber_group="u1",
        lam=float(lam),
        trivializations=((charts[0], fiber), (charts[1], fiber)),
        embedding=embed,
        fiber_volume=volume,
        rebuild=lambda l: hopf_bundle(l, resolution=resolution, n_fiber=n_fiber),
    )


def hopf_project(points: np.ndarray) -> np.ndarray:
    """Base coordinate of ambient total-space points (inf over the far chart)."""
    points = np.asarray(points, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return points[..., 1] / points[..., 0]


# ----------------------------------------------------------------------------
# fields on the total space
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BundleField:
    """Section samples over one trivialization: base grid times fiber grid.

    ``values`` has the base chart shape, then the fiber axis, then any value
    shape (scalars or matrices).  ``evaluator(tag, base_pts, t)`` re-evaluates
    the field at arbitrary fiber phases; ``ambient`` is the total-space
    function it came from, which is what allows re-sampling at other scales.
    ``closure_jump`` records how far the field is from closing up over one
    fiber period.
    """

    bundle: PrincipalBundleSpec
    tag: str
    values: np.ndarray
    fiber_points: np.ndarray
    evaluator: object = None
    ambient: object = None
    closure_jump: float = 0.0

    @property
    def base_ndim(self) -> int:
        return self.bundle.chart(self.tag).dim

    @property
    def n_fiber(self) -> int:
        return self.values.shape[self.base_ndim]

    @property
    def value_shape(self) -> tuple:
        return self.values.shape[self.base_ndim + 1 :]


def field_from_evaluator(
    bundle: PrincipalBundleSpec,
    tag: str,
    evaluator,
    n_fiber: int = 64,
    ambient=None,
) -> BundleField:
    """Sample ``evaluator(tag, base_pts, t)`` over one trivialization.

    Rejects fields that fail to close up over a full fiber period.
    """
    return _field_from_evaluator(bundle, tag, evaluator, ambient, n_fiber)


def _field_from_evaluator(bundle, tag, evaluator, ambient, n_fiber) -> BundleField:
    chart = bundle.chart(tag)
    grid = chart.grid()
    ts = bundle.fiber_points(n_fiber)
    vals = np.stack([evaluator(tag, grid, np.full(grid.shape[:-1], t)) for t in ts], axis=chart.dim)
    closed = evaluator(tag, grid, np.full(grid.shape[:-1], 2.0 * np.pi / bundle.lam))
    start = evaluator(tag, grid, np.zeros(grid.shape[:-1]))
    jump = float(np.abs(closed - start).max())
    if jump > 1e-8:
        raise ValueError(f"field does not close up along the fiber: jump {jump:.3e}")
    return BundleField(
        bundle=bundle,
        tag=tag,
        values=vals,
        fiber_points=ts,
        evaluator=evaluator,
        ambient=ambient,
        closure_jump=jump,
    )


def hopf_ambient_field(bundle: PrincipalBundleSpec, F, n_fiber: int = 64) -> tuple:
    """Restrict an ambient C^2 function to the total space, one field per chart."""

    def evaluator(tag, base_pts, t):
        return F(bundle.embedding(tag, base_pts, t))

    return tuple(
        _field_from_evaluator(bundle, tag, evaluator, F, n_fiber)
        for tag in bundle.chart_names
    )


def conjugate_field(phi: BundleField, gamma_fn) -> BundleField:
    """Conjugate a matrix-valued field by a gauge change pulled back from the base."""
    chart = phi.bundle.chart(phi.tag)
    g = gamma_fn(chart.grid())
    ginv = np.linalg.inv(g)
    vals = np.einsum(
        "...ka,...tab,...bj->...tkj", ginv, phi.values, g, optimize=True
    )
    evaluator = None
    if phi.evaluator is not None:
        def evaluator(tag, base_pts, t, _inner=phi.evaluator):
            gg = gamma_fn(np.asarray(base_pts, dtype=float))
            return np.einsum(
                "...ka,...ab,...bj->...kj",
                np.linalg.inv(gg), _inner(tag, base_pts, t), gg,
                optimize=True,
            )
    return BundleField(
        bundle=phi.bundle,
        tag=phi.tag,
        values=vals,
        fiber_points=phi.fiber_points,
        evaluator=evaluator,
        ambient=None,
        closure_jump=phi.closure_jump,
    )


# ----------------------------------------------------------------------------
# fiber Fourier modes
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModeFields:
    """Per-mode coefficient fields of one trivialization, with sup norms."""

    tag: str
    lam: float
    modes: dict
    norms: dict
    noise_floor: float


def _mode_labels(irreps) -> tuple:
    ks = []
    for item in irreps:
        if isinstance(item, Irrep):
            ks.append(int(item.label[0]))
        else:
            ks.append(int(item))
    return tuple(ks)


def _transform(values, fiber_points, lam, ks, base_ndim):
    n = len(fiber_points)
    out = {}
    for k in ks:
        w = np.exp(-1j * lam * k * fiber_points) / n
        out[k] = np.tensordot(values, w, axes=(base_ndim, 0))
    return out


def fiber_fourier_modes(
    phi: BundleField,
    bundle: PrincipalBundleSpec | None = None,
    irreps=range(9),
    tolerance: float = 1e-8,
    check: bool = True,
) -> ModeFields:
    """Mean of the field against e^{-i lam k t} along every fiber.

    The transform is repeated on a doubled fiber grid (re-evaluating when the
    field knows how, subsampling otherwise); the largest coefficient shift is
    the noise floor and trips :class:`QuadratureUnderresolved` when above
    ``tolerance``.
    """
    bundle = bundle or phi.bundle
    ks = _mode_labels(irreps)
    nd = phi.base_ndim
    coarse = _transform(phi.values, phi.fiber_points, bundle.lam, ks, nd)
    if phi.evaluator is not None:
        ts = bundle.fiber_points(2 * phi.n_fiber)
        grid = bundle.chart(phi.tag).grid()
        vals = np.stack(
            [phi.evaluator(phi.tag, grid, np.full(grid.shape[:-1], t)) for t in ts],
            axis=nd,
        )
        fine = _transform(vals, ts, bundle.lam, ks, nd)
    else:
        if phi.n_fiber % 2:
            raise QuadratureUnderresolved(
                "cannot halve an odd fiber grid for the resolution check"
            )
        sub = phi.values[(slice(None),) * nd + (slice(None, None, 2),)]
        fine = coarse
        coarse = _transform(sub, phi.fiber_points[::2], bundle.lam, ks, nd)
    floor = max(float(np.abs(coarse[k] - fine[k]).max()) for k in ks)
    if check and floor > tolerance:
        raise QuadratureUnderresolved(
            f"doubling the fiber grid moved modes by {floor:.3e} > {tolerance:g}"
        )
    norms = {k: float(np.abs(fine[k]).max()) for k in ks}
    return ModeFields(
        tag=phi.tag, lam=bundle.lam, modes=fine, norms=norms, noise_floor=floor
    )


def hopf_mode_closed_form(base_coord: np.ndarray, k: int, lam: float) -> np.ndarray:
    """The k-th fiber mode of exp(z) + exp(v) over either chart coordinate."""
    c = np.asarray(base_coord, dtype=complex)
    return (1.0 + c**k) / (
        math.factorial(k) * lam**k * (1.0 + np.abs(c) ** 2) ** (k / 2.0)
    )


# ----------------------------------------------------------------------------
# reduction across a scale schedule
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReductionResult:
    """Ground mode at the largest scale plus the mode-norm decay table.

    ``ground_mode`` maps chart tags to base-grid arrays; it carries no fiber
    axis, so fiber independence holds by construction.  ``table`` rows are
    ``{"lam": value, "mode_norms": {k: sup norm}}`` in schedule order.
    """

    ground_mode: dict
    mode_norms: dict
    lam: float
    table: tuple
    schedule: tuple


def reduce(
    phi,
    bundle: PrincipalBundleSpec,
    lambda_schedule,
    irreps=range(9),
    n_fiber: int | None = None,
    tolerance: float = 1e-8,
) -> ReductionResult:
    """Extract ground modes per scale and tabulate how the others decay.

    ``phi`` is one field or a sequence covering several charts.  Scales other
    than the bundle's own require fields built from an ambient function, since
    the total space itself changes with the scale.
    """
    fields = (phi,) if isinstance(phi, BundleField) else tuple(phi)
    schedule = tuple(float(l) for l in lambda_schedule)
    if not schedule:
        raise ValueError("empty scale schedule")
    ks = _mode_labels(irreps)
    rows = []
    per_lam = {}
    for lam in schedule:
        if lam == bundle.lam:
            spec_l, fields_l = bundle, fields
        else:
            for f in fields:
                if f.ambient is None:
                    raise ValueError(
                        "re-sampling at a new scale needs fields with an ambient function"
                    )
            if bundle.rebuild is None:
                raise ValueError("bundle cannot be rebuilt at a new scale")
            spec_l = bundle.rebuild(lam)
            fields_l = [
                hopf_ambient_field(spec_l, f.ambient, n_fiber or f.n_fiber)[
                    spec_l.chart_names.index(f.tag)
                ]
                for f in fields
            ]
        mode_sets = [
            fiber_fourier_modes(f, spec_l, ks, tolerance=tolerance) for f in fields_l
        ]
        norms = {
            k: max(ms.norms[k] for ms in mode_sets) for k in ks
        }
        rows.append({"lam": lam, "mode_norms": norms})
        per_lam[lam] = mode_sets
    top = max(schedule)
    ground = {ms.tag: ms.modes[0] for ms in per_lam[top]}
    return ReductionResult(
        ground_mode=ground,
        mode_norms=rows[schedule.index(top)]["mode_norms"],
        lam=top,
        table=tuple(rows),
        schedule=schedule,
    )


# ----------------------------------------------------------------------------
# local sections and pullback error norms
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LocalSection:
    """A base-to-total-space map given by a fiber phase over each chart.

    ``singular`` lists (tag, coordinate) points where the phase is undefined;
    error norms and derivative bounds exclude disks around them.
    """

    bundle: PrincipalBundleSpec
    phase: object
    singular: tuple = ()

    def points(self, tag: str, base_pts: np.ndarray) -> np.ndarray:
        return self.bundle.embedding(tag, base_pts, self.phase(tag, base_pts))

    def projection_residual(self, n: int = 64, seed: int = 0) -> float:
        """Largest base-coordinate error of projecting the section back down."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for tag in self.bundle.chart_names:
            pts = rng.uniform(-1.0, 1.0, size=(n, 2))
            keep = np.ones(n, dtype=bool)
            for s_tag, s_pt in self.singular:
                if s_tag == tag:
                    keep &= np.abs(pts - np.asarray(s_pt)).max(axis=-1) > 0.05
            pts = pts[keep]
            down = hopf_project(self.points(tag, pts))
            c = _complex_coord(pts)
            if tag == "cp1_b":
                with np.errstate(divide="ignore", invalid="ignore"):
                    down = 1.0 / down
            worst = max(worst, float(np.abs(down - c).max()))
        return worst

    def _bound_once(self, resolution: int, radius: float) -> float:
        worst = 0.0
        for tag in self.bundle.chart_names:
            chart = tg.Chart(
                name=tag, box=((-1.0, 1.0), (-1.0, 1.0)),
                periodic=(False, False), resolution=(resolution, resolution),
            )
            grid = chart.grid()
            pts = self.points(tag, grid)
            comps = [np.gradient(pts[..., c], *chart.spacings, axis=(0, 1), edge_order=2)
                     for c in range(pts.shape[-1])]
            speed_sq = 0.0
            for per_comp in comps:
                for d in per_comp:
                    speed_sq = speed_sq + np.abs(d) ** 2
            mask = np.ones(grid.shape[:-1], dtype=bool)
            for s_tag, s_pt in self.singular:
                if s_tag == tag:
                    dist = np.sqrt(((grid - np.asarray(s_pt)) ** 2).sum(axis=-1))
                    mask &= dist > radius
            worst = max(worst, float(np.sqrt(speed_sq[mask]).max()))
        return worst

    def derivative_bound(self, resolution: int = 41, exclusion_cells: int = 3) -> float:
        """Sup of the section's derivative off the singular disks.

        The estimate is repeated at doubled resolution with the same physical
        exclusion radius; persistent growth marks an unbounded section.
        """
        spacing = 2.0 / (resolution - 1)
        radius = exclusion_cells * spacing
        coarse = self._bound_once(resolution, radius)
        fine = self._bound_once(2 * resolution - 1, radius)
        if fine > 1.5 * coarse:
            raise SectionUnbounded(
                f"derivative estimate grew from {coarse:.3e} to {fine:.3e} under refinement"
            )
        return fine


def hopf_section(bundle: PrincipalBundleSpec, t0: float = 0.0) -> LocalSection:
    """The constant-phase section, singular only at the far pole.

    Over the reciprocal chart the same section appears with phase
    t0 - arg(b)/lam, which has no continuous extension through b = 0.
    """
    lam = bundle.lam

    def phase(tag, base_pts):
        base_pts = np.asarray(base_pts, dtype=float)
        if tag == "cp1_a":
            return np.full(base_pts.shape[:-1], t0)
        return t0 - np.angle(_complex_coord(base_pts)) / lam

    return LocalSection(
        bundle=bundle, phase=phase, singular=(("cp1_b", (0.0, 0.0)),)
    )


def _disk_mask(chart: tg.Chart, section: LocalSection, tag: str, cells: int):
    grid = chart.grid()
    mask = np.ones(grid.shape[:-1], dtype=bool)
    radius = cells * max(chart.spacings)
    for s_tag, s_pt in section.singular:
        if s_tag == tag:
            dist = np.sqrt(((grid - np.asarray(s_pt)) ** 2).sum(axis=-1))
            mask &= dist > radius
    return mask


def _grad_norm(values: np.ndarray, chart: tg.Chart) -> np.ndarray:
    parts = np.gradient(values, *chart.spacings, axis=(0, 1), edge_order=2)
    return np.sqrt(sum(np.abs(p) ** 2 for p in parts))


def hopf_bound_constant(
    bundle: PrincipalBundleSpec,
    section: LocalSection | None = None,
    k_max: int = 8,
    exclusion_cells: int = 3,
) -> float:
    """Numeric maximization of the scale-free mode amplitudes plus derivatives.

    For mode k the scale-free amplitude is (1 + c^k)(1 + |c|^2)^{-k/2}, times
    the section's phase factor e^{-ik arg c} on the reciprocal chart; the
    constant is the largest value of (amplitude + its grid derivative) / k!
    over both chart grids minus the singular disks.
    """
    section = section or hopf_section(bundle)
    best = 0.0
    for tag in bundle.chart_names:
        chart = bundle.chart(tag)
        grid = chart.grid()
        c = _complex_coord(grid)
        mask = _disk_mask(chart, section, tag, exclusion_cells)
        for k in range(1, k_max + 1):
            m = (1.0 + c**k) / (1.0 + np.abs(c) ** 2) ** (k / 2.0)
            if tag == "cp1_b":
                m = m * np.exp(-1j * k * np.angle(c))
            total = (np.abs(m) + _grad_norm(m, chart)) / math.factorial(k)
            best = max(best, float(total[mask].max()))
    return best


@dataclass(frozen=True, eq=False)
class PullbackErrorTable:
    """Section pullback errors against the reduction, per scale.

    Rows carry the sup-norm error, the sup-plus-derivative error off the
    singular disks, and the geometric-series comparison bound
    ``constant * (1 / (1 - 1/lam) - 1)``.
    """

    constant: float
    rows: tuple
    exclusion_cells: int


def section_pullback_error(
    section: LocalSection,
    phi,
    result: ReductionResult,
    lambda_schedule,
    exclusion_cells: int = 3,
    k_max: int = 8,
) -> PullbackErrorTable:
    """Compare the section pullback of the field with the reduction limit."""
    bundle = section.bundle
    fields = (phi,) if isinstance(phi, BundleField) else tuple(phi)
    section.derivative_bound(exclusion_cells=exclusion_cells)
    C = hopf_bound_constant(bundle, section, k_max=k_max, exclusion_cells=exclusion_cells)
    rows = []
    for lam in (float(l) for l in lambda_schedule):
        if lam == bundle.lam:
            spec_l = bundle
        else:
            spec_l = bundle.rebuild(lam)
        sec_l = hopf_section(spec_l, t0=section.phase("cp1_a", np.zeros((1, 2)))[0])
        sup = 0.0
        sup1 = 0.0
        for f in fields:
            if f.ambient is None and lam != bundle.lam:
                raise ValueError("re-sampling at a new scale needs an ambient function")
            ambient = f.ambient
            tag = f.tag
            chart = spec_l.chart(tag)
            grid = chart.grid()
            pullback = ambient(sec_l.points(tag, grid))
            ground = result.ground_mode[tag]
            err = pullback - ground
            mask = _disk_mask(chart, sec_l, tag, exclusion_cells)
            sup = max(sup, float(np.abs(err).max()))
            sup1 = max(sup1, float((np.abs(err) + _grad_norm(err, chart))[mask].max()))
        bound = C * (1.0 / (1.0 - 1.0 / lam) - 1.0) if lam > 1 else float("inf")
        rows.append({"lam": lam, "sup": sup, "sup1": sup1, "bound": bound})
    return PullbackErrorTable(constant=C, rows=tuple(rows), exclusion_cells=exclusion_cells)


# ----------------------------------------------------------------------------
# the squashed metric family on the fourteen-dimensional group
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SquashedMetric:
    """Diagonal left-invariant metric in the root basis, vertical part scaled.

    The eight vertical directions (Cartan plane plus the three long-root
    planes) carry lam^-1/4 factors with in-plane weights (1, 3); the six
    horizontal directions keep lam-free weights (1, 1/3).
    """

    lam: float
    gram: np.ndarray
    vertical_indices: tuple
    horizontal_indices: tuple

    @property
    def vertical_block(self) -> np.ndarray:
        idx = np.asarray(self.vertical_indices)
        return self.gram[np.ix_(idx, idx)]

    @property
    def horizontal_block(self) -> np.ndarray:
        idx = np.asarray(self.horizontal_indices)
        return self.gram[np.ix_(idx, idx)]

    @property
    def fiber_volume_element(self) -> float:
        return float(np.sqrt(np.linalg.det(self.vertical_block)))


def _paired(indices) -> list:
    idx = list(indices)
    return [(idx[i], idx[i + 1]) for i in range(0, len(idx), 2)]


def squashed_metric(lam: float, embedding: SubalgebraEmbedding | None = None) -> SquashedMetric:
    """Assemble the one-parameter squashed metric family term by term."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if embedding is None:
        embedding = embed_su3_in_g2(build_algebra("g2"))
    dim = embedding.ambient.dim
    gram = np.zeros((dim, dim))
    scale = lam ** -0.25
    cartan = tuple(embedding.shared_cartan)
    long_planes = [i for i in embedding.sub_indices if i not in cartan]
    for first, second in [cartan] + _paired(long_planes):
        gram[first, first] = scale
        gram[second, second] = 3.0 * scale
    for first, second in _paired(embedding.complement_indices):
        gram[first, first] = 1.0
        gram[second, second] = 1.0 / 3.0
    return SquashedMetric(
        lam=float(lam),
        gram=gram,
        vertical_indices=tuple(embedding.sub_indices),
        horizontal_indices=tuple(embedding.complement_indices),
    )


def _matrix_norm_sq(M: np.ndarray, H: np.ndarray, Hinv: np.ndarray) -> float:
    return float(np.einsum("ik,ij,kl,jl->", H, M, M, Hinv, optimize=True))


def g2_reduction_check(
    J,
    embedding: SubalgebraEmbedding,
    lambda_schedule,
    e: float = 1.0,
) -> tuple:
    """Horizontal vacuum integrand of a block-diagonal structure, per scale.

    The structure must be block diagonal for the vertical/horizontal split;
    its horizontal block phi is measured against the projected metric
    (gram averaged with its phi-conjugate): integrability term from the
    complement-restricted structure constants, potential term |phi phi* - Id|,
    both in the projected horizontal norm.
    """
    if e == 0:
        raise ZeroCoupling("the potential coupling must be nonzero")
    report = blockdiagonal_check(embedding, J, validate=True)
    Jmat = J.J if isinstance(J, SamelsonStructure) else np.asarray(J, dtype=float)
    comp = np.asarray(embedding.complement_indices)
    phi = report.complement_block
    c = embedding.ambient.structure_constants
    c_comp = c[np.ix_(comp, comp, comp)]
    N = nijenhuis_from_constants(c_comp, phi)
    rows = []
    for lam in (float(l) for l in lambda_schedule):
        g = squashed_metric(lam, embedding).gram
        projected = 0.5 * (g + Jmat.T @ g @ Jmat)
        H = projected[np.ix_(comp, comp)]
        Hinv = np.linalg.inv(H)
        off = np.delete(projected[comp], comp, axis=1)
        orth = float(np.abs(phi.T @ H @ phi - H).max())
        n_sq = float(
            np.einsum("kl,kij,lab,ia,jb->", H, N, N, Hinv, Hinv, optimize=True)
        )
        phi_star = Hinv @ phi.T @ H
        pot = phi @ phi_star - np.eye(len(comp))
        p_sq = _matrix_norm_sq(pot, H, Hinv)
        rows.append(
            {
                "lam": lam,
                "integrand": n_sq + e**2 * p_sq,
                "nijenhuis_sq": n_sq,
                "potential_sq": p_sq,
                "orthogonality": orth,
                "gram_offblock": float(np.abs(off).max()),
            }
        )
    return tuple(rows)
