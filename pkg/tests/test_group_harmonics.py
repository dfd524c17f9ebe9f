"""Group charts, matrix harmonics, Fourier analysis, and decay scans.

Independent oracles: angle integrals are checked against the Beta function,
chart volumes against closed forms, representation matrices against the
homomorphism property on random group elements, and Fourier projections
against Schur orthogonality (projecting a matrix coefficient onto itself
must give exactly 1/sqrt(dim)).
"""

import math

import numpy as np
import pytest

from fibervac import group_harmonics as gh
from fibervac.errors import QuadratureUnderresolved, UnsupportedLabel

SU3_LABELS = ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1))


def beta_half(p, q):
    # exact integral of cos^p sin^q over [0, pi/2]
    x, y = (q + 1) / 2.0, (p + 1) / 2.0
    return 0.5 * math.gamma(x) * math.gamma(y) / math.gamma(x + y)


def random_params(chart, n, seed):
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in chart.param_box])
    hi = np.array([b[1] for b in chart.param_box])
    return lo + (hi - lo) * rng.random((n, chart.n_axes))


# ----------------------------------------------------------------------------
# charts: unitarity, volumes, Haar density
# ----------------------------------------------------------------------------


@pytest.mark.parametrize(
    "chart",
    [gh.circle_chart(1.0), gh.circle_chart(7.5), gh.su2_chart(), gh.su3_chart(1.0), gh.su3_chart(64.0)],
    ids=["u1", "u1_shrunk", "su2", "su3", "su3_shrunk"],
)
def test_chart_embeds_unitary_det_one(chart):
    U = chart.embed(random_params(chart, 40, 11))
    eye = np.eye(U.shape[-1])
    assert np.abs(U @ np.conj(np.swapaxes(U, -1, -2)) - eye).max() < 5e-15
    if chart.group != "u1":  # u1 elements are bare phases, not det-1 matrices
        assert np.abs(np.linalg.det(U) - 1.0).max() < 5e-15


def test_su3_chart_origin_is_identity():
    U = gh.su3_chart(1.0).embed(np.zeros(8))
    assert np.abs(U - np.eye(3)).max() < 1e-15


def test_chart_constructors_reject_nonpositive_scale():
    with pytest.raises(ValueError):
        gh.circle_chart(0.0)
    with pytest.raises(ValueError):
        gh.su3_chart(-2.0)


def test_separable_theta_matches_beta_function():
    # quadrature on one angle axis vs the exact Beta-function value
    for axis in range(3):
        dc, ds = gh._SU3_DENSITY_POWS[axis]
        for cpow in range(4):
            for spow in range(4):
                got = gh._su3_separable_theta(axis, cpow, spow, 24)
                want = beta_half(cpow + dc, spow + ds)
                assert abs(got - want) < 1e-14


def test_su3_density_angle_factors():
    # cos^3 sin integrates to 1/4, cos sin to 1/2
    assert abs(gh._su3_separable_theta(0, 0, 0, 24) - 0.25) < 1e-15
    assert abs(gh._su3_separable_theta(1, 0, 0, 24) - 0.5) < 1e-15
    assert abs(gh._su3_separable_theta(2, 0, 0, 24) - 0.5) < 1e-15


@pytest.mark.parametrize("lam", [1.0, 8.0, 100.0])
def test_su3_chart_volume_is_reciprocal_scale(lam):
    chart = gh.su3_chart(lam)
    assert chart.volume == 1.0 / lam
    # quadrature volume: Fourier coefficient of 1 against the trivial irrep
    cs = gh.fourier_coefficients(
        gh.ChartFunction(lambda: 1.0, ()), chart, [gh.su3_irrep(0, 0)]
    )
    assert abs(cs.entry((0, 0), 0, 0) - 1.0) < 1e-12


def test_su2_chart_volume_normalized():
    chart = gh.su2_chart()
    cs = gh.fourier_coefficients(
        gh.ChartFunction(lambda a, b, g: np.ones(np.broadcast_shapes(np.shape(a), np.shape(b), np.shape(g))), (0, 1, 2)),
        chart,
        [gh.su2_irrep(0)],
    )
    assert abs(cs.entry((0,), 0, 0) - 1.0) < 1e-12


def test_phase_frequency_scaling():
    assert abs(gh.su3_chart(32.0).phase_frequency - 32.0**0.2) < 1e-15
    assert gh.circle_chart(5.0).phase_frequency == 5.0
    assert gh.su2_chart().phase_frequency == 1.0


# ----------------------------------------------------------------------------
# irreducible representations
# ----------------------------------------------------------------------------


def test_irrep_dimensions():
    assert gh.u1_irrep(3).dim == 1
    assert [gh.su2_irrep(n).dim for n in range(4)] == [1, 2, 3, 4]
    assert [gh.su3_irrep(*l).dim for l in SU3_LABELS] == [1, 3, 3, 6, 6, 8]


def test_make_irrep_rejects_unknown_labels():
    with pytest.raises(UnsupportedLabel):
        gh.su3_irrep(2, 1)
    with pytest.raises(UnsupportedLabel):
        gh.su3_irrep(3, 0)
    with pytest.raises(UnsupportedLabel):
        gh.su2_irrep(-1)
    with pytest.raises(UnsupportedLabel):
        gh.make_irrep("so5", 1)


@pytest.mark.parametrize("group,labels", [
    ("u1", [(-2,), (0,), (3,)]),
    ("su2", [(0,), (1,), (2,), (3,)]),
    ("su3", SU3_LABELS),
])
def test_irrep_homomorphism_and_unitarity(group, labels):
    chart = {"u1": gh.circle_chart(2.0), "su2": gh.su2_chart(), "su3": gh.su3_chart(3.0)}[group]
    U = chart.embed(random_params(chart, 12, 23))
    V = chart.embed(random_params(chart, 12, 29))
    for label in labels:
        ir = gh.make_irrep(group, label[0] if group != "su3" else label)
        rU, rV, rUV = (gh.irrep_coeff(ir, M) for M in (U, V, U @ V))
        assert np.abs(rU @ rV - rUV).max() < 5e-13
        eye = np.eye(ir.dim)
        assert np.abs(rU @ np.conj(np.swapaxes(rU, -1, -2)) - eye).max() < 5e-13
        assert np.abs(gh.irrep_coeff(ir, np.eye(U.shape[-1])) - eye).max() < 1e-14


def test_su3_symbolic_matches_numeric():
    chart = gh.su3_chart(17.0)
    params = random_params(chart, 15, 31)
    thetas = [params[:, a] for a in range(3)]
    phis = [params[:, 3 + b] for b in range(5)]
    U = chart.embed(params)
    for label in SU3_LABELS:
        sym = gh._su3_symbolic(label)
        num = gh.irrep_coeff(gh.su3_irrep(*label), U)
        for i in range(len(sym)):
            for j in range(len(sym)):
                vals = sym[i][j].evaluate(thetas, phis, chart.phase_frequency)
                assert np.abs(vals - num[:, i, j]).max() < 5e-13


def test_trigpoly_conj_and_product():
    p = gh.TrigPoly.term(2.0, cpow=(1, 0, 0), n=(1, 0, 0, 0, 0))
    q = gh.TrigPoly.term(1.0 + 1j, spow=(0, 1, 0), n=(0, -1, 0, 0, 0))
    thetas = [np.array([0.3]), np.array([0.7]), np.array([0.2])]
    phis = [np.array([0.4])] * 5
    prod = (p * q).evaluate(thetas, phis, 1.0)
    assert np.abs(prod - p.evaluate(thetas, phis, 1.0) * q.evaluate(thetas, phis, 1.0)).max() < 1e-15
    conj = p.conj().evaluate(thetas, phis, 1.0)
    assert np.abs(conj - np.conj(p.evaluate(thetas, phis, 1.0))).max() < 1e-15


# ----------------------------------------------------------------------------
# orthonormality Gram matrices
# ----------------------------------------------------------------------------


def test_gram_u1():
    irreps = [gh.u1_irrep(k) for k in range(-3, 4)]
    _, _, dev = gh.orthonormality_gram(irreps, gh.circle_chart(2.0))
    assert dev < 1e-12


def test_gram_su2_through_spin_one():
    irreps = [gh.su2_irrep(n) for n in range(3)]
    index, G, dev = gh.orthonormality_gram(irreps, gh.su2_chart())
    assert len(index) == 1 + 4 + 9
    assert dev < 1e-12
    assert np.abs(G - np.eye(len(index))).max() == dev


def test_gram_su3_all_supported_labels():
    irreps = [gh.su3_irrep(*l) for l in SU3_LABELS]
    index, _, dev = gh.orthonormality_gram(irreps, gh.su3_chart(1.0))
    assert len(index) == sum(ir.dim**2 for ir in irreps)
    assert dev < 1e-12


def test_gram_su3_shrunken_chart():
    # orthonormality is exact for every scale, not just the round case
    irreps = [gh.su3_irrep(0, 0), gh.su3_irrep(1, 0), gh.su3_irrep(0, 1)]
    _, _, dev = gh.orthonormality_gram(irreps, gh.su3_chart(50.0))
    assert dev < 1e-12


# ----------------------------------------------------------------------------
# Fourier coefficients: Schur projections, synthesis, mode extraction
# ----------------------------------------------------------------------------


def test_schur_projection_su3_fundamental():
    chart = gh.su3_chart(1.0)
    freq = chart.phase_frequency
    f = gh.ChartFunction(
        lambda t1, t2, p1: np.cos(t1) * np.cos(t2) * np.exp(1j * freq * p1), (0, 1, 3)
    )
    cs = gh.fourier_coefficients(f, chart, [gh.su3_irrep(*l) for l in ((0, 0), (1, 0), (0, 1))])
    a = cs.coefficients[(1, 0)]
    assert abs(a[0, 0] - 1.0 / math.sqrt(3.0)) < 1e-12
    off = a.copy()
    off[0, 0] = 0.0
    assert np.abs(off).max() < 1e-12
    assert cs.max_abs((0, 0)) < 1e-12
    assert cs.max_abs((0, 1)) < 1e-12


def test_schur_projection_su2():
    chart = gh.su2_chart()

    def f(a, b, g):
        return gh.irrep_coeff(gh.su2_irrep(1), gh._su2_euler(a, b, g))[..., 0, 0]

    cs = gh.fourier_coefficients(
        gh.ChartFunction(f, (0, 1, 2)), chart, [gh.su2_irrep(n) for n in range(3)]
    )
    assert abs(cs.entry((1,), 0, 0) - 1.0 / math.sqrt(2.0)) < 1e-12
    assert cs.max_abs((0,)) < 1e-12
    assert cs.max_abs((2,)) < 1e-12


def test_u1_mode_extraction():
    chart = gh.circle_chart(3.0)
    f = gh.ChartFunction(lambda t: np.exp(1j * 3.0 * 2 * t) + 0.5, (0,))
    cs = gh.fourier_coefficients(f, chart, [gh.u1_irrep(k) for k in range(-2, 3)])
    assert abs(cs.entry((2,), 0, 0) - 1.0) < 1e-12
    assert abs(cs.entry((0,), 0, 0) - 0.5) < 1e-12
    for k in (-2, -1, 1):
        assert abs(cs.entry((k,), 0, 0)) < 1e-12
    assert cs.noise_floor < 1e-12


def test_synthesis_inverts_analysis_su2():
    rng = np.random.default_rng(5)
    chart = gh.su2_chart()
    labels = ((0,), (1,), (2,))
    coeffs = {l: rng.standard_normal((l[0] + 1, l[0] + 1)) + 1j * rng.standard_normal((l[0] + 1, l[0] + 1)) for l in labels}
    truth = gh.FourierCoefficientSet(
        group="su2", lam=1.0, labels=labels, coefficients=coeffs,
        noise_floor=0.0, rule=gh.QuadratureRule(),
    )

    def f(a, b, g):
        params = np.stack(np.broadcast_arrays(a, b, g), axis=-1)
        return truth.synthesize(chart, params)

    cs = gh.fourier_coefficients(
        gh.ChartFunction(f, (0, 1, 2)), chart, [gh.su2_irrep(n) for n in range(3)]
    )
    for l in labels:
        assert np.abs(cs.coefficients[l] - coeffs[l]).max() < 1e-10
    # and synthesis of the recovered coefficients reproduces f pointwise
    params = random_params(chart, 20, 41)
    assert np.abs(cs.synthesize(chart, params) - f(*params.T)).max() < 1e-10


def test_underresolved_quadrature_raises():
    chart = gh.su3_chart(1.0)
    sharp = gh.ChartFunction(lambda t1: np.exp(20.0 * np.cos(8.0 * t1**2)), (0,))
    with pytest.raises(QuadratureUnderresolved):
        gh.fourier_coefficients(
            sharp, chart, [gh.su3_irrep(0, 0)], rule=gh.QuadratureRule(4, 8)
        )
    # the same computation with check disabled reports its floor instead
    cs = gh.fourier_coefficients(
        sharp, chart, [gh.su3_irrep(0, 0)], rule=gh.QuadratureRule(4, 8), check=False
    )
    assert cs.noise_floor > 1e-8


# ----------------------------------------------------------------------------
# decay scans
# ----------------------------------------------------------------------------


def su3_profile():
    return gh.ChartFunction(
        lambda t1, t2, p1: np.exp(np.cos(t1) * np.cos(t2) * np.cos(p1)), (0, 1, 3)
    )


def test_decay_scan_su3_frozen_values():
    tab = gh.decay_scan(su3_profile(), gh.su3_irrep(1, 0), [1.0, 10.0, 100.0, 1.0e4])
    frozen = (3.071747063e-01, 2.662262737e-01, 2.385445505e-01, 7.946304106e-02)
    for (lam, mx, floor), want in zip(tab.rows, frozen):
        assert abs(mx - want) < 1e-9 * max(1.0, abs(want) / 1e-2)
        assert floor < 1e-12
    vals = [r[1] for r in tab.rows]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert tab.fitted_exponent < 0.0


def test_decay_scan_su3_asymptotic_exponent():
    # the collapsing phase box has width ~ lam^(-1/5); an even profile loses
    # its oscillatory mass quadratically in the width, so the peak coefficient
    # falls off like lam^(-2/5)
    tab = gh.decay_scan(su3_profile(), gh.su3_irrep(1, 0), [1.0e4, 1.0e6, 1.0e8])
    assert abs(tab.fitted_exponent - (-0.4)) < 0.08


def test_decay_scan_u1_quadratic_falloff():
    f = gh.ChartFunction(lambda t: np.exp(np.cos(t)), (0,))
    tab = gh.decay_scan(f, gh.u1_irrep(1), [10.0, 100.0, 1000.0, 1.0e4])
    vals = [r[1] for r in tab.rows]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert abs(tab.fitted_exponent - (-2.0)) < 0.05
    assert abs(vals[-1] - 8.961925e-08) < 1e-12


def test_decay_table_csv():
    tab = gh.decay_scan(su3_profile(), gh.su3_irrep(1, 0), [1.0, 10.0])
    lines = tab.to_csv().splitlines()
    assert lines[0] == "lambda,max_abs,noise_floor,fitted_exponent"
    assert len(lines) == 3


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------


def test_coefficients_json_roundtrip():
    chart = gh.su2_chart()

    def f(a, b, g):
        return gh.irrep_coeff(gh.su2_irrep(2), gh._su2_euler(a, b, g))[..., 1, 0]

    cs = gh.fourier_coefficients(
        gh.ChartFunction(f, (0, 1, 2)), chart, [gh.su2_irrep(n) for n in range(3)]
    )
    back = gh.coefficients_from_json(gh.coefficients_to_json(cs))
    assert back.group == cs.group and back.labels == cs.labels
    assert back.noise_floor == cs.noise_floor
    for l in cs.labels:
        assert np.array_equal(back.coefficients[l], cs.coefficients[l])


def test_coefficients_csv_shape():
    chart = gh.circle_chart(1.0)
    cs = gh.fourier_coefficients(
        gh.ChartFunction(lambda t: np.cos(t), (0,)), chart, [gh.u1_irrep(k) for k in (-1, 0, 1)]
    )
    lines = gh.coefficients_to_csv(cs).splitlines()
    assert lines[0] == "irrep,i,j,re,im"
    assert len(lines) == 4
    # cos(lam t) with lam = 1 splits evenly between the two adjacent modes
    assert abs(cs.entry((1,), 0, 0) - 0.5) < 1e-12
    assert abs(cs.entry((-1,), 0, 0) - 0.5) < 1e-12
