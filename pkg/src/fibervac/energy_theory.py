"""Energy functionals whose zero locus encodes orthogonal almost complex
structures, with the gauge action and a gradient-descent minimizer.

Three quadratic functionals are provided over a chart grid.  The weak form
integrates the squared Nijenhuis tensor plus a quartic potential that is
minimized exactly on g-orthogonal almost complex structures; the kahler-type
form replaces the Nijenhuis term by the full covariant derivative; the strong
form adds the curvature of a freely chosen metric connection.  All pointwise
norms are induced by the configuration metric with the natural index raising
and lowering, unnormalized (a constant 3*Id endomorphism in six dimensions
has squared norm 54).  The two vacuum residual maps are the sup-normed
defects of N = 0 and Phi Phi* = Id; the second is divided by sqrt(dim) so a
vanishing field reads exactly 1.

For left-invariant data on a compact group the integrand is constant, so a
separate evaluation path takes structure constants and the Gram matrix of
the frame at the identity and multiplies by volume instead of integrating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonDecreasingStep, SingularGauge, ZeroCoupling
from .tensor_geometry import (
    AlmostComplexField,
    Chart,
    ConnectionField,
    MetricField,
    _nijenhuis_from_parts,
    covariant_endomorphism_derivative,
    endomorphism_norm,
    levi_civita,
    nijenhuis_coordinate,
    nijenhuis_norm,
    partial_derivatives,
)

__all__ = [
    "FieldConfiguration",
    "EnergyReport",
    "MinimizeResult",
    "adjoint_endomorphism",
    "energy_weak",
    "energy_kahler",
    "energy_strong",
    "connection_curvature",
    "vacuum_residuals",
    "gauge_transform",
    "nijenhuis_from_constants",
    "left_invariant_energy",
    "left_invariant_residuals",
    "minimize_weak",
    "weak_gradient_check",
    "trajectory_to_csv",
]


@dataclass(eq=False)
class FieldConfiguration:
    """An endomorphism field with metric, optional connection, and coupling."""

    phi: AlmostComplexField
    metric: MetricField
    connection: ConnectionField | None = None
    coupling: float = 1.0

    def __post_init__(self):
        if self.coupling == 0:
            raise ZeroCoupling("the coupling constant must be nonzero")
        if self.phi.chart.resolution != self.metric.chart.resolution:
            raise ValueError("phi and metric live on different grids")

    @property
    def chart(self) -> Chart:
        return self.phi.chart


@dataclass(eq=False)
class EnergyReport:
    """Energy terms plus the two pointwise vacuum residual maps.

    ``total`` is the sum of the terms and is nonnegative; it vanishes exactly
    when both residual maps vanish.  ``term_curvature`` is None except for
    the strong functional.  ``term_nijenhuis`` holds the first (derivative)
    term of whichever functional produced the report.  Trajectory entries
    from the minimizer omit the residual maps to stay lightweight.
    """

    total: float
    term_nijenhuis: float
    term_potential: float
    term_curvature: float | None = None
    residual_nijenhuis: np.ndarray | None = None
    residual_potential: np.ndarray | None = None
    iteration: int | None = None

    @property
    def max_residuals(self) -> tuple:
        r1 = float(np.max(self.residual_nijenhuis)) if self.residual_nijenhuis is not None else float("nan")
        r2 = float(np.max(self.residual_potential)) if self.residual_potential is not None else float("nan")
        return (r1, r2)


def adjoint_endomorphism(phi_values: np.ndarray, g_values: np.ndarray) -> np.ndarray:
    """Metric adjoint Phi* = g^{-1} Phi^T g."""
    ginv = np.linalg.inv(g_values)
    return np.einsum("...ia,...ba,...bl->...il", ginv, phi_values, g_values, optimize=True)


def _volume_weights(cfg: FieldConfiguration) -> np.ndarray:
    return cfg.chart.quadrature_weights() * np.sqrt(np.maximum(cfg.metric.determinant(), 0.0))


def _ensure_connection(cfg: FieldConfiguration) -> ConnectionField:
    if cfg.connection is not None:
        return cfg.connection
    return levi_civita(cfg.metric)


def _potential_maps(cfg: FieldConfiguration):
    """Pointwise |Phi Phi* - Id| (metric norm) and its normalized residual."""
    n = cfg.chart.dim
    star = adjoint_endomorphism(cfg.phi.values, cfg.metric.values)
    M = np.einsum("...km,...mj->...kj", cfg.phi.values, star) - np.eye(n)
    norms = endomorphism_norm(M, cfg.metric.values)
    return norms, norms / np.sqrt(n)


def energy_weak(cfg: FieldConfiguration, tolerance: float | None = None) -> EnergyReport:
    """Half the integral of |N_Phi|^2 + e^2 |Phi Phi* - Id|^2 over the chart."""
    conn = _ensure_connection(cfg)
    N = nijenhuis_coordinate(cfg.phi, conn, tolerance=tolerance)
    nmap = nijenhuis_norm(N.values, cfg.metric.values)
    pot_norm, pot_residual = _potential_maps(cfg)
    w = _volume_weights(cfg)
    term_n = 0.5 * float(np.sum(w * nmap**2))
    term_p = 0.5 * cfg.coupling**2 * float(np.sum(w * pot_norm**2))
    return EnergyReport(
        total=term_n + term_p,
        term_nijenhuis=term_n,
        term_potential=term_p,
        residual_nijenhuis=nmap,
        residual_potential=pot_residual,
    )


def _covariant_term(cfg: FieldConfiguration, conn: ConnectionField) -> np.ndarray:
    dphi = partial_derivatives(cfg.phi.values, cfg.chart)
    D = covariant_endomorphism_derivative(cfg.phi.values, dphi, conn.values)
    g = cfg.metric.values
    ginv = np.linalg.inv(g)
    sq = np.einsum(
        "...lkj,...mpq,...lm,...kp,...jq->...", D, D, ginv, g, ginv, optimize=True
    )
    return np.maximum(sq, 0.0)


def energy_kahler(cfg: FieldConfiguration) -> EnergyReport:
    """Half the integral of |nabla Phi|^2 + e^2 |Phi Phi* - Id|^2 (Levi-Civita)."""
    conn = _ensure_connection(cfg)
    dsq = _covariant_term(cfg, conn)
    pot_norm, pot_residual = _potential_maps(cfg)
    w = _volume_weights(cfg)
    term_d = 0.5 * float(np.sum(w * dsq))
    term_p = 0.5 * cfg.coupling**2 * float(np.sum(w * pot_norm**2))
    return EnergyReport(
        total=term_d + term_p,
        term_nijenhuis=term_d,
        term_potential=term_p,
        residual_nijenhuis=np.sqrt(dsq),
        residual_potential=pot_residual,
    )


def connection_curvature(conn: ConnectionField) -> np.ndarray:
    """Curvature F[..., k, l, i, j] = R^k_{l i j} of a connection by finite differences."""
    chart = conn.chart
    dgamma = partial_derivatives(conn.values, chart)  # (..., a, k, i, j) = d_a Gamma^k_ij
    term1 = np.einsum("...ikjl->...klij", dgamma)  # d_i Gamma^k_jl
    term2 = np.einsum("...jkil->...klij", dgamma)  # d_j Gamma^k_il
    gg1 = np.einsum("...kim,...mjl->...klij", conn.values, conn.values, optimize=True)
    gg2 = np.einsum("...kjm,...mil->...klij", conn.values, conn.values, optimize=True)
    return term1 - term2 + gg1 - gg2


def energy_strong(cfg: FieldConfiguration) -> EnergyReport:
    """Adds (1/e^2) |F|^2 of the supplied connection to the kahler-type terms."""
    if cfg.connection is None:
        raise ValueError("the strong functional needs an explicitly supplied connection")
    conn = cfg.connection
    F = connection_curvature(conn)
    g = cfg.metric.values
    ginv = np.linalg.inv(g)
    fsq = np.einsum(
        "...klij,...pqrs,...kp,...lq,...ir,...js->...",
        F, F, g, ginv, ginv, ginv, optimize=True,
    )
    dsq = _covariant_term(cfg, conn)
    pot_norm, pot_residual = _potential_maps(cfg)
    w = _volume_weights(cfg)
    term_c = 0.5 / cfg.coupling**2 * float(np.sum(w * np.maximum(fsq, 0.0)))
    term_d = 0.5 * float(np.sum(w * dsq))
    term_p = 0.5 * cfg.coupling**2 * float(np.sum(w * pot_norm**2))
    return EnergyReport(
        total=term_c + term_d + term_p,
        term_nijenhuis=term_d,
        term_potential=term_p,
        term_curvature=term_c,
        residual_nijenhuis=np.sqrt(dsq),
        residual_potential=pot_residual,
    )


def vacuum_residuals(cfg: FieldConfiguration, tolerance: float | None = None) -> tuple:
    """Sup norms of the two vacuum defect maps (Nijenhuis, normalized potential)."""
    conn = _ensure_connection(cfg)
    N = nijenhuis_coordinate(cfg.phi, conn, tolerance=tolerance)
    nmap = nijenhuis_norm(N.values, cfg.metric.values)
    _, pot_residual = _potential_maps(cfg)
    return (float(nmap.max()), float(pot_residual.max()))


def gauge_transform(cfg: FieldConfiguration, gamma: np.ndarray) -> FieldConfiguration:
    """Conjugate the configuration by a pointwise invertible endomorphism field.

    Phi -> gamma^{-1} Phi gamma, g -> gamma^T g gamma, and the connection
    (Levi-Civita of g when absent) transforms with the extra derivative term
    gamma^{-1} (d gamma + Gamma gamma).  For orthogonal-valued gamma the weak
    energy is invariant up to discretization error.
    """
    chart = cfg.chart
    n = chart.dim
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape == (n, n):
        gamma = np.broadcast_to(gamma, tuple(chart.resolution) + (n, n)).copy()
    dets = np.linalg.det(gamma)
    if float(np.abs(dets).min()) < 1e-12:
        raise SingularGauge(f"gauge determinant drops to {np.abs(dets).min():.3e}")
    ginv_gamma = np.linalg.inv(gamma)
    phi_new = np.einsum(
        "...ka,...ab,...bj->...kj", ginv_gamma, cfg.phi.values, gamma, optimize=True
    )
    g_new = np.einsum(
        "...ak,...ab,...bj->...kj", gamma, cfg.metric.values, gamma, optimize=True
    )
    conn = _ensure_connection(cfg)
    dgamma = partial_derivatives(gamma, chart)  # (..., l, a, j) = d_l gamma^a_j
    inhom = dgamma + np.einsum("...alb,...bj->...laj", conn.values, gamma, optimize=True)
    conn_new = np.einsum("...ka,...laj->...klj", ginv_gamma, inhom, optimize=True)
    return FieldConfiguration(
        phi=AlmostComplexField(chart, phi_new, source=cfg.phi.source, almost_complex=False),
        metric=MetricField(chart, g_new),
        connection=ConnectionField(chart, conn_new),
        coupling=cfg.coupling,
    )


# ----------------------------------------------------------------------------
# left-invariant evaluation at the identity
# ----------------------------------------------------------------------------


def nijenhuis_from_constants(constants: np.ndarray, J: np.ndarray) -> np.ndarray:
    """At-identity Nijenhuis tensor of a constant structure from structure constants.

    N(u, v) = [u, v] - [Ju, Jv] + J[u, Jv] + J[Ju, v] in the given frame,
    with constants[k, i, j] the k-th component of [b_i, b_j].
    """
    c = np.asarray(constants, dtype=float)
    J = np.asarray(J, dtype=float)
    return (
        c
        - np.einsum("kab,ai,bj->kij", c, J, J, optimize=True)
        + np.einsum("km,mib,bj->kij", J, c, J, optimize=True)
        + np.einsum("km,maj,ai->kij", J, c, J, optimize=True)
    )


def left_invariant_residuals(constants: np.ndarray, gram: np.ndarray, J: np.ndarray) -> tuple:
    gram = np.asarray(gram, dtype=float)
    J = np.asarray(J, dtype=float)
    n = gram.shape[-1]
    N = nijenhuis_from_constants(constants, J)
    r1 = float(nijenhuis_norm(N, gram))
    star = adjoint_endomorphism(J, gram)
    M = J @ star - np.eye(n)
    r2 = float(endomorphism_norm(M, gram)) / np.sqrt(n)
    return (r1, r2)


def left_invariant_energy(
    constants: np.ndarray,
    gram: np.ndarray,
    J: np.ndarray,
    coupling: float = 1.0,
    volume: float = 1.0,
) -> EnergyReport:
    """Identity-point energy density times volume for a homogeneous configuration."""
    if coupling == 0:
        raise ZeroCoupling("the coupling constant must be nonzero")
    gram = np.asarray(gram, dtype=float)
    J = np.asarray(J, dtype=float)
    n = gram.shape[-1]
    N = nijenhuis_from_constants(constants, J)
    nsq = float(nijenhuis_norm(N, gram)) ** 2
    star = adjoint_endomorphism(J, gram)
    M = J @ star - np.eye(n)
    psq = float(endomorphism_norm(M, gram)) ** 2
    term_n = 0.5 * volume * nsq
    term_p = 0.5 * coupling**2 * volume * psq
    return EnergyReport(
        total=term_n + term_p,
        term_nijenhuis=term_n,
        term_potential=term_p,
        residual_nijenhuis=np.sqrt(np.array(nsq)),
        residual_potential=np.sqrt(np.array(psq)) / np.sqrt(n),
    )


# ----------------------------------------------------------------------------
# gradient descent on the weak functional
# ----------------------------------------------------------------------------


@dataclass(eq=False)
class MinimizeResult:
    reports: list
    config: FieldConfiguration
    iterations: int
    converged: bool
    final_residuals: tuple


def _check_flat_periodic(cfg: FieldConfiguration):
    chart = cfg.chart
    if not all(chart.periodic):
        raise ValueError("the minimizer needs a fully periodic chart")
    eye = np.eye(chart.dim)
    if float(np.abs(cfg.metric.values - eye).max()) > 1e-12:
        raise ValueError("the minimizer needs the flat identity metric")


def _flat_weak_pieces(phi: np.ndarray, chart: Chart, coupling: float):
    """Energy and analytic gradient of the discrete weak functional.

    Flat identity metric and periodic grid: the covariant derivative is the
    plain central difference, whose exact antisymmetry under the grid sum
    makes the summation-by-parts in the gradient exact.
    """
    n = chart.dim
    w = float(np.prod(chart.spacings))
    dphi = partial_derivatives(phi, chart)
    N = _nijenhuis_from_parts(phi, dphi)
    B = np.einsum("...lkj->...klj", dphi) - np.einsum("...jkl->...klj", dphi)
    M = np.einsum("...km,...jm->...kj", phi, phi) - np.eye(n)
    term_n = 0.5 * w * float(np.sum(N * N))
    term_p = 0.5 * coupling**2 * w * float(np.sum(M * M))
    # variation with respect to Phi^a_b; the two divergence terms come from
    # summing the central difference operator by parts over the periodic grid
    G1 = 2.0 * np.einsum("...kbj,...kaj->...ab", N, B, optimize=True)
    S = 2.0 * np.einsum("...li,...kij->...klj", phi, N, optimize=True)
    dS = partial_derivatives(S, chart)  # (..., m, k, l, j)
    T1 = np.einsum("...lalb->...ab", dS)
    T2 = np.einsum("...dabd->...ab", dS)
    grad_pot = 2.0 * coupling**2 * np.einsum("...km,...mb->...kb", M, phi)
    grad = w * (G1 - T1 + T2 + grad_pot)
    grad = 0.5 * (grad - np.swapaxes(grad, -1, -2))  # tangent to antisymmetric fields
    return term_n + term_p, grad, term_n, term_p


def minimize_weak(
    cfg: FieldConfiguration,
    max_iterations: int = 2000,
    initial_step: float = 0.25,
    gradient_tolerance: float = 1e-8,
    armijo: float = 1e-4,
    min_step: float = 1e-14,
) -> MinimizeResult:
    """Backtracking gradient descent over antisymmetric endomorphism fields.

    The energy sequence is monotone non-increasing; fifty consecutive failed
    line searches raise :class:`NonDecreasingStep`.  Trajectory reports carry
    the energy split per iteration; the final report includes residual maps.
    """
    _check_flat_periodic(cfg)
    chart = cfg.chart
    phi = 0.5 * (cfg.phi.values - np.swapaxes(cfg.phi.values, -1, -2))
    energy, grad, tn, tp = _flat_weak_pieces(phi, chart, cfg.coupling)
    reports = [EnergyReport(total=energy, term_nijenhuis=tn, term_potential=tp, iteration=0)]
    step = initial_step
    fails = 0
    iterations = 0
    converged = False
    for it in range(1, max_iterations + 1):
        iterations = it
        if float(np.abs(grad).max()) < gradient_tolerance:
            converged = True
            iterations = it - 1
            break
        p2 = float(np.sum(grad * grad))
        accepted = False
        if p2 > 0.0:
            t = step
            while t >= min_step:
                trial = phi - t * grad
                trial = 0.5 * (trial - np.swapaxes(trial, -1, -2))
                e_new, g_new, tn_new, tp_new = _flat_weak_pieces(trial, chart, cfg.coupling)
                if e_new <= energy - armijo * t * p2:
                    phi, energy, grad = trial, e_new, g_new
                    tn, tp = tn_new, tp_new
                    step = min(t * 2.0, 100.0 * initial_step)
                    accepted = True
                    break
                t *= 0.5
        if accepted:
            fails = 0
        else:
            fails += 1
            if fails >= 50:
                raise NonDecreasingStep(
                    f"line search failed {fails} consecutive times at energy {energy:.3e}"
                )
        reports.append(EnergyReport(total=energy, term_nijenhuis=tn, term_potential=tp, iteration=it))
    final_cfg = FieldConfiguration(
        phi=AlmostComplexField(chart, phi, source="minimizer", almost_complex=False),
        metric=cfg.metric,
        connection=cfg.connection,
        coupling=cfg.coupling,
    )
    final_report = energy_weak(final_cfg)
    final_report.iteration = iterations
    reports.append(final_report)
    return MinimizeResult(
        reports=reports,
        config=final_cfg,
        iterations=iterations,
        converged=converged,
        final_residuals=final_report.max_residuals,
    )


def weak_gradient_check(cfg: FieldConfiguration, seed: int = 0, step: float = 1e-6) -> float:
    """Relative mismatch of the analytic gradient against central differences.

    Uses a random antisymmetric direction field (the minimizer's tangent
    space) and the same discrete energy on both sides.
    """
    _check_flat_periodic(cfg)
    chart = cfg.chart
    rng = np.random.default_rng(seed)
    phi = 0.5 * (cfg.phi.values - np.swapaxes(cfg.phi.values, -1, -2))
    direction = rng.standard_normal(phi.shape)
    direction = 0.5 * (direction - np.swapaxes(direction, -1, -2))
    direction /= np.abs(direction).max()
    _, grad, _, _ = _flat_weak_pieces(phi, chart, cfg.coupling)
    analytic = float(np.sum(grad * direction))
    e_plus = _flat_weak_pieces(phi + step * direction, chart, cfg.coupling)[0]
    e_minus = _flat_weak_pieces(phi - step * direction, chart, cfg.coupling)[0]
    numeric = (e_plus - e_minus) / (2.0 * step)
    scale = max(abs(analytic), abs(numeric), 1e-12)
    return abs(analytic - numeric) / scale


def trajectory_to_csv(reports: list) -> str:
    lines = ["iteration,total,term_nijenhuis,term_potential,residual_nijenhuis,residual_potential"]
    for rep in reports:
        r1, r2 = rep.max_residuals
        it = rep.iteration if rep.iteration is not None else ""
        lines.append(
            f"{it},{rep.total:.12e},{rep.term_nijenhuis:.12e},{rep.term_potential:.12e},"
            f"{r1:.12e},{r2:.12e}"
        )
    return "\n".join(lines) + "\n"
