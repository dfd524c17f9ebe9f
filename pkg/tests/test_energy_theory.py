"""Energy functional tests with independent oracles.

Oracles: hand-computed potential values for scaled structures, exact
vanishing on flat vacua, structure-constant evaluation at the identity of
compact groups (cross-checked against two independent code paths and against
chart stencils through an Euler-angle product chart), gauge invariance
verified pointwise in the small-spacing limit, and central-difference
gradients for the minimizer.
"""

import numpy as np
import pytest

from fibervac import energy_theory as et
from fibervac import errors
from fibervac import lie_core as lc
from fibervac import tensor_geometry as tg
from fibervac.group_harmonics import _su2_euler


def antisym(a):
    return 0.5 * (a - np.swapaxes(a, -1, -2))


def mild_structure_4d(pts):
    t, u, v, w = (pts[..., k] for k in range(4))
    a = 0.3 * np.sin(t)
    b = 0.2 * np.cos(v)
    A = np.zeros(pts.shape[:-1] + (4, 4))
    for k in range(4):
        A[..., k, k] = 1.0
    A[..., 0, 2] = a
    A[..., 1, 3] = b
    return np.einsum("...ij,jk,...kl->...il", A, tg.block_rotation(4), np.linalg.inv(A))


def rotation_gauge(pts, scale):
    th = scale * np.sin(pts[..., 0]) * np.cos(pts[..., 1])
    R = np.zeros(pts.shape[:-1] + (4, 4))
    R[..., 0, 0] = np.cos(th)
    R[..., 0, 1] = -np.sin(th)
    R[..., 1, 0] = np.sin(th)
    R[..., 1, 1] = np.cos(th)
    R[..., 2, 2] = 1.0
    R[..., 3, 3] = 1.0
    return R


def flat_config(dim, res, phi_values=None, coupling=1.0):
    ch = tg.flat_torus_atlas(dim, res).charts[0]
    if phi_values is None:
        phi = tg.constant_structure(ch)
    else:
        phi = tg.AlmostComplexField(ch, phi_values, almost_complex=False)
    return et.FieldConfiguration(phi=phi, metric=tg.metric_field(ch), coupling=coupling)


# ---------------------------------------------------------------------------
# construction and basic values
# ---------------------------------------------------------------------------


def test_zero_coupling_rejected():
    ch = tg.flat_torus_atlas(2, 8).charts[0]
    with pytest.raises(errors.ZeroCoupling):
        et.FieldConfiguration(
            phi=tg.constant_structure(ch), metric=tg.metric_field(ch), coupling=0.0
        )
    with pytest.raises(errors.ZeroCoupling):
        et.left_invariant_energy(np.zeros((2, 2, 2)), np.eye(2), np.zeros((2, 2)), coupling=0.0)


def test_flat_torus_vacuum():
    cfg = flat_config(6, 5)
    rep = et.energy_weak(cfg)
    assert rep.total == 0.0
    assert rep.total == rep.term_nijenhuis + rep.term_potential
    assert et.vacuum_residuals(cfg) == (0.0, 0.0)


def test_scaled_structure_potential_value():
    # Phi = 2 J0 gives Phi Phi* - Id = 3 Id, squared norm 54 in six dimensions
    ch = tg.flat_torus_atlas(6, 5).charts[0]
    cfg = et.FieldConfiguration(
        phi=tg.AlmostComplexField(ch, 2.0 * tg.constant_structure(ch).values, almost_complex=False),
        metric=tg.metric_field(ch),
    )
    rep = et.energy_weak(cfg)
    want = 0.5 * (2 * np.pi) ** 6 * 54.0
    assert rep.term_nijenhuis == 0.0
    assert abs(rep.term_potential - want) / want < 1e-12


def test_zero_field_potential_residual_is_one():
    ch = tg.flat_torus_atlas(6, 4).charts[0]
    cfg = et.FieldConfiguration(
        phi=tg.AlmostComplexField(ch, np.zeros(tuple(ch.resolution) + (6, 6)), almost_complex=False),
        metric=tg.metric_field(ch),
    )
    assert et.vacuum_residuals(cfg) == (0.0, 1.0)


def test_cayley_configuration_positive_energy():
    ch = tg.sphere_atlas(6, 5).charts[0]
    cfg = et.FieldConfiguration(phi=tg.cayley_field(ch), metric=tg.metric_field(ch))
    rep = et.energy_weak(cfg)
    assert rep.total > 1.0
    r1, r2 = et.vacuum_residuals(cfg)
    assert r1 > 1.0  # non-integrable structure
    assert r2 < 1e-10  # exactly metric-orthogonal
    kah = et.energy_kahler(cfg)
    assert kah.total > 0.0
    assert kah.total == kah.term_nijenhuis + kah.term_potential


def test_strong_functional_flat_and_curved():
    ch = tg.flat_torus_atlas(2, 12).charts[0]
    zero_conn = tg.ConnectionField(ch, np.zeros(tuple(ch.resolution) + (2, 2, 2)))
    cfg = et.FieldConfiguration(
        phi=tg.constant_structure(ch), metric=tg.metric_field(ch), connection=zero_conn
    )
    rep = et.energy_strong(cfg)
    assert rep.total < 1e-10
    assert rep.term_curvature == 0.0
    assert rep.total == rep.term_nijenhuis + rep.term_potential + rep.term_curvature

    pts = ch.grid()
    wob = np.zeros(tuple(ch.resolution) + (2, 2, 2))
    wob[..., 0, 0, 1] = 0.3 * np.sin(pts[..., 0])
    wob[..., 1, 1, 0] = 0.2 * np.cos(pts[..., 1])
    curved = et.FieldConfiguration(
        phi=tg.constant_structure(ch), metric=tg.metric_field(ch),
        connection=tg.ConnectionField(ch, wob),
    )
    rep2 = et.energy_strong(curved)
    assert rep2.term_curvature > 1e-3

    no_conn = et.FieldConfiguration(phi=tg.constant_structure(ch), metric=tg.metric_field(ch))
    with pytest.raises(ValueError):
        et.energy_strong(no_conn)


# ---------------------------------------------------------------------------
# gauge action
# ---------------------------------------------------------------------------


def test_gauge_identity_and_constant_rotation():
    ch = tg.flat_torus_atlas(4, 8).charts[0]
    pts = ch.grid()
    cfg = et.FieldConfiguration(
        phi=tg.AlmostComplexField(ch, mild_structure_4d(pts)), metric=tg.metric_field(ch)
    )
    E0 = et.energy_weak(cfg).total
    assert E0 > 1.0
    E_id = et.energy_weak(et.gauge_transform(cfg, np.eye(4))).total
    assert E_id == E0
    th = 0.7
    C = np.eye(4)
    C[:2, :2] = [[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]]
    E_const = et.energy_weak(et.gauge_transform(cfg, C)).total
    assert abs(E_const - E0) / E0 < 1e-12


def test_gauge_smooth_rotation_discretization_limited():
    drift = {}
    for res in (8, 16):
        ch = tg.flat_torus_atlas(4, res).charts[0]
        pts = ch.grid()
        cfg = et.FieldConfiguration(
            phi=tg.AlmostComplexField(ch, mild_structure_4d(pts)), metric=tg.metric_field(ch)
        )
        E0 = et.energy_weak(cfg).total
        E_s = et.energy_weak(et.gauge_transform(cfg, rotation_gauge(pts, 0.2))).total
        drift[res] = abs(E_s - E0) / E0
    assert drift[16] < 5e-4
    assert drift[16] < 0.8 * drift[8]


def test_gauge_invariance_pointwise_continuum():
    """The weak integrand is gauge invariant in the small-spacing limit."""

    def phi_fn(pts):
        return mild_structure_4d(pts)

    def gamma_fn(pts):
        return rotation_gauge(pts, 0.5)

    def phi_tilde(pts):
        G = gamma_fn(pts)
        return np.einsum(
            "...ka,...ab,...bj->...kj", np.linalg.inv(G), phi_fn(pts), G, optimize=True
        )

    x0 = np.array([[0.7, 1.3, 2.1, 0.4]])
    h = 1e-4
    N = tg.nijenhuis_pointwise(phi_fn, None, x0, h)
    eye = np.broadcast_to(np.eye(4), (1, 4, 4)).copy()
    norm0 = tg.nijenhuis_norm(N, eye)

    phi0 = phi_tilde(x0)
    dphi = np.empty((1, 4, 4, 4))
    for a in range(4):
        e = np.zeros(4)
        e[a] = h
        dphi[:, a] = (phi_tilde(x0 + e) - phi_tilde(x0 - e)) / (2 * h)
    G0 = gamma_fn(x0)
    Ginv = np.linalg.inv(G0)
    gam = np.empty((1, 4, 4, 4))
    for l in range(4):
        e = np.zeros(4)
        e[l] = 1e-6
        dG = (gamma_fn(x0 + e) - gamma_fn(x0 - e)) / 2e-6
        gam[:, :, l, :] = np.einsum("...ka,...aj->...kj", Ginv, dG)
    D = tg.covariant_endomorphism_derivative(phi0, dphi, gam)
    Nt = tg._nijenhuis_from_parts(phi0, D)
    g_t = np.einsum("...ak,...aj->...kj", G0, G0)
    norm1 = tg.nijenhuis_norm(Nt, g_t)
    assert abs(float(norm0[0] - norm1[0])) < 1e-6
    assert float(norm0[0]) > 0.5


def test_singular_gauge_rejected():
    cfg = flat_config(2, 8)
    with pytest.raises(errors.SingularGauge):
        et.gauge_transform(cfg, np.zeros((2, 2)))


# ---------------------------------------------------------------------------
# left-invariant evaluation
# ---------------------------------------------------------------------------


def test_left_invariant_matches_at_identity_operator():
    for name in ("su2_su2", "su3", "g2"):
        spec = lc.build_algebra(name)
        J = lc.build_samelson(spec)
        N_lc = lc.nijenhuis_at_identity(spec, J)
        N_et = et.nijenhuis_from_constants(spec.structure_constants, J.J)
        assert np.abs(N_lc - N_et).max() == 0.0
        r1, r2 = et.left_invariant_residuals(spec.structure_constants, np.eye(spec.dim), J.J)
        assert r1 < 1e-12
        assert r2 < 1e-12
        rep = et.left_invariant_energy(spec.structure_constants, np.eye(spec.dim), J.J)
        assert rep.total < 1e-24


def test_left_invariant_nonvacuum_positive():
    spec = lc.build_algebra("su3")
    bad = lc.build_samelson(spec, signs=(1, 1, -1), validate=False)
    r1, r2 = et.left_invariant_residuals(spec.structure_constants, np.eye(spec.dim), bad.J)
    assert r1 > 0.5
    assert r2 < 1e-12
    rep = et.left_invariant_energy(
        spec.structure_constants, np.eye(spec.dim), bad.J, volume=2.0
    )
    assert np.isclose(rep.total, 0.5 * 2.0 * r1**2)


PAULI = (
    np.array([[0, 1], [1, 0]], complex),
    np.array([[0, -1j], [1j, 0]], complex),
    np.array([[1, 0], [0, -1]], complex),
)
SU2_GEN = tuple(-0.5j * s for s in PAULI)


def product_group_frame(x, h=1e-6):
    """Left logarithmic derivative of the two-factor Euler chart, expanded in
    the orthonormal frame of each factor."""
    x = np.asarray(x, dtype=float)
    F = np.zeros(x.shape[:-1] + (6, 6))
    for f in range(2):
        ang = [x[..., 3 * f + m] for m in range(3)]
        U = _su2_euler(*ang)
        Uinv = np.conjugate(np.swapaxes(U, -1, -2))
        for jloc in range(3):
            shift = [np.zeros_like(a) for a in ang]
            shift[jloc] = np.full_like(ang[jloc], h)
            Up = _su2_euler(*[a + s for a, s in zip(ang, shift)])
            Um = _su2_euler(*[a - s for a, s in zip(ang, shift)])
            M = Uinv @ ((Up - Um) / (2 * h))
            for a in range(3):
                coeff = -2.0 * np.einsum("ij,...ji->...", SU2_GEN[a], M)
                F[..., 3 * f + a, 3 * f + jloc] = np.sqrt(2.0) * np.real(coeff)
    return F


def product_group_constants():
    c6 = np.zeros((6, 6, 6))
    eps = np.zeros((3, 3, 3))
    for (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[k, i, j] = 1.0
        eps[k, j, i] = -1.0
    for f in range(2):
        c6[3 * f : 3 * f + 3, 3 * f : 3 * f + 3, 3 * f : 3 * f + 3] = eps / np.sqrt(2.0)
    return c6


def test_product_group_chart_matches_identity_route():
    """Pointwise chart evaluation on SU(2) x SU(2) reproduces the constant
    identity-frame density of a left-invariant structure."""
    c6 = product_group_constants()
    J_std = np.zeros((6, 6))
    for a, b in ((0, 1), (3, 4), (2, 5)):
        J_std[b, a] = 1.0
        J_std[a, b] = -1.0
    assert et.left_invariant_residuals(c6, np.eye(6), J_std) == (0.0, 0.0)

    rng = np.random.default_rng(12)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    J_rand = Q @ J_std @ Q.T
    r_rand = et.left_invariant_residuals(c6, np.eye(6), J_rand)
    assert r_rand[0] > 1.0

    pts = rng.uniform(0.6, 2.4, size=(4, 6))
    for J, want in ((J_std, 0.0), (J_rand, r_rand[0])):
        phi_fn = lambda p: np.einsum(
            "...ka,ab,...bj->...kj", np.linalg.inv(product_group_frame(p)), J,
            product_group_frame(p), optimize=True,
        )
        metric_fn = lambda p: np.einsum(
            "...ai,...aj->...ij", product_group_frame(p), product_group_frame(p)
        )
        N = tg.nijenhuis_pointwise(phi_fn, metric_fn, pts, 1e-3)
        norms = tg.nijenhuis_norm(N, metric_fn(pts))
        assert np.abs(norms - want).max() < 1e-5


# ---------------------------------------------------------------------------
# the minimizer
# ---------------------------------------------------------------------------


def test_minimize_vacuum_is_stationary():
    cfg = flat_config(2, 16)
    out = et.minimize_weak(cfg, max_iterations=100)
    assert out.iterations == 0
    assert out.converged
    assert out.reports[-1].total < 1e-10
    assert out.final_residuals[0] < 1e-12 and out.final_residuals[1] < 1e-12


def test_minimize_converges_from_random_start():
    rng = np.random.default_rng(20260823)
    ch = tg.flat_torus_atlas(2, 16).charts[0]
    pert = antisym(rng.standard_normal((16, 16, 2, 2))) * 0.4
    cfg = flat_config(2, 16, tg.constant_structure(ch).values + pert)
    out = et.minimize_weak(cfg, max_iterations=5000)
    assert out.converged
    final = out.reports[-1]
    assert final.total < 1e-10
    sq = np.einsum("...km,...mj->...kj", out.config.phi.values, out.config.phi.values)
    assert np.abs(sq + np.eye(2)).max() < 1e-6
    totals = [r.total for r in out.reports[:-1]]
    assert all(a >= b - 1e-15 for a, b in zip(totals, totals[1:]))


def test_minimize_exercises_derivative_term():
    rng = np.random.default_rng(5)
    ch = tg.flat_torus_atlas(4, 6).charts[0]
    pert = antisym(rng.standard_normal((6, 6, 6, 6, 4, 4))) * 0.3
    cfg = flat_config(4, 6, tg.constant_structure(ch).values + pert)
    start = et.energy_weak(cfg).total
    out = et.minimize_weak(cfg, max_iterations=3000)
    assert out.converged
    assert out.reports[-1].total < 1e-8 < start


def test_minimize_nondecreasing_step_detection():
    cfg = flat_config(2, 8)
    with pytest.raises(errors.NonDecreasingStep):
        et.minimize_weak(cfg, max_iterations=200, gradient_tolerance=0.0)


def test_minimize_rejects_unsupported_charts():
    ch = tg.sphere_atlas(2, 9).charts[0]
    cfg = et.FieldConfiguration(phi=tg.constant_structure(ch), metric=tg.metric_field(ch))
    with pytest.raises(ValueError):
        et.minimize_weak(cfg)
    ch2 = tg.flat_torus_atlas(2, 8).charts[0]
    stretched = np.broadcast_to(np.diag([1.0, 4.0]), (8, 8, 2, 2)).copy()
    cfg2 = et.FieldConfiguration(
        phi=tg.constant_structure(ch2), metric=tg.MetricField(ch2, stretched)
    )
    with pytest.raises(ValueError):
        et.minimize_weak(cfg2)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    for dim, res in ((2, 16), (4, 8)):
        ch = tg.flat_torus_atlas(dim, res).charts[0]
        raw = antisym(rng.standard_normal(tuple(ch.resolution) + (dim, dim)))
        cfg = flat_config(dim, res, raw, coupling=1.3)
        assert et.weak_gradient_check(cfg, seed=1) < 1e-6


def test_trajectory_csv_format():
    rng = np.random.default_rng(3)
    ch = tg.flat_torus_atlas(2, 8).charts[0]
    pert = antisym(rng.standard_normal((8, 8, 2, 2))) * 0.3
    cfg = flat_config(2, 8, tg.constant_structure(ch).values + pert)
    out = et.minimize_weak(cfg, max_iterations=500)
    text = et.trajectory_to_csv(out.reports)
    lines = text.strip().split("\n")
    assert lines[0] == (
        "iteration,total,term_nijenhuis,term_potential,residual_nijenhuis,residual_potential"
    )
    assert len(lines) == len(out.reports) + 1
    first = lines[1].split(",")
    assert first[0] == "0"
    assert np.isclose(float(first[1]), out.reports[0].total, rtol=1e-10)
