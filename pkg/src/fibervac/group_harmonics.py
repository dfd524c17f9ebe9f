"""Harmonic analysis on U(1), SU(2), and SU(3): charts, irreps, Fourier data.

The SU(3) chart family is parametrized by three angles ``theta1..theta3`` on
``[0, pi/2)`` and five phases ``phi1..phi5`` on ``[0, 2 pi / lam^{1/5})``; its
matrix entries are exact finite sums of terms

    coef * prod_a cos(theta_a)^p sin(theta_a)^q * exp(i lam^{1/5} n . phi)

which this module keeps symbolically (:class:`TrigPoly`).  Group integrals of
such terms factor over every chart axis the integrand does not couple to: the
phase axes integrate to exact Kronecker deltas under periodic trapezoid sums
and the angle axes are low-degree polynomial integrals, exact under modest
Gauss-Legendre rules.  Only the axes a user function declares in
``depends_on`` ever receive a dense tensor grid, which is what makes Fourier
coefficients over the 8-dimensional chart tractable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import QuadratureUnderresolved, UnsupportedLabel

# ----------------------------------------------------------------------------
# symbolic trigonometric polynomials on the SU(3) chart
# ----------------------------------------------------------------------------


class TrigPoly:
    """Finite sum of terms cos/sin powers in three angles times integer phases.

    Terms are stored as a dict mapping (cos_powers, sin_powers, phase_vector)
    to a complex coefficient; cos_powers and sin_powers are 3-tuples, the
    phase vector is a 5-tuple of integers n with phase exp(i k n . phi) for a
    chart-dependent frequency k.  Closed under +, *, conj, which is what the
    functorial irrep constructions need.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = dict(terms) if terms else {}

    @staticmethod
    def term(coef, cpow=(0, 0, 0), spow=(0, 0, 0), n=(0, 0, 0, 0, 0)) -> "TrigPoly":
        return TrigPoly({(tuple(cpow), tuple(spow), tuple(n)): complex(coef)})

    @staticmethod
    def one() -> "TrigPoly":
        return TrigPoly.term(1.0)

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        out = dict(self.terms)
        for key, coef in other.terms.items():
            out[key] = out.get(key, 0.0) + coef
        return TrigPoly({k: v for k, v in out.items() if abs(v) > 1e-15})

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            out: dict = {}
            for (c1, s1, n1), a in self.terms.items():
                for (c2, s2, n2), b in other.terms.items():
                    key = (
                        tuple(x + y for x, y in zip(c1, c2)),
                        tuple(x + y for x, y in zip(s1, s2)),
                        tuple(x + y for x, y in zip(n1, n2)),
                    )
                    out[key] = out.get(key, 0.0) + a * b
            return TrigPoly({k: v for k, v in out.items() if abs(v) > 1e-15})
        return TrigPoly({k: v * complex(other) for k, v in self.terms.items()})

    __rmul__ = __mul__

    def conj(self) -> "TrigPoly":
        return TrigPoly(
            {
                (c, s, tuple(-x for x in n)): coef.conjugate()
                for (c, s, n), coef in self.terms.items()
            }
        )

    def evaluate(self, thetas, phis, freq: float) -> np.ndarray:
        """Evaluate on broadcastable angle/phase arrays with phase frequency ``freq``."""
        total = 0.0
        for (cp, sp, n), coef in self.terms.items():
            val = coef * np.ones(1, dtype=complex)
            for a in range(3):
                if cp[a]:
                    val = val * np.cos(thetas[a]) ** cp[a]
                if sp[a]:
                    val = val * np.sin(thetas[a]) ** sp[a]
            phase = 0.0
            nonzero = False
            for b in range(5):
                if n[b]:
                    phase = phase + n[b] * phis[b]
                    nonzero = True
            if nonzero:
                val = val * np.exp(1j * freq * phase)
            total = total + val
        return np.asarray(total)

    def max_phase_degree(self) -> int:
        return max((max(abs(x) for x in n) for _, _, n in self.terms), default=0)


def _su3_fundamental_terms() -> list[list[TrigPoly]]:
    """The nine SU(3) chart entries as exact term lists."""
    T = TrigPoly.term
    c1 = (1, 0, 0)
    s1 = (1, 0, 0)
    g = [[None] * 3 for _ in range(3)]
    g[0][0] = T(1, cpow=(1, 1, 0), n=(1, 0, 0, 0, 0))
    g[0][1] = T(1, spow=(1, 0, 0), n=(0, 0, 1, 0, 0))
    g[0][2] = T(1, cpow=(1, 0, 0), spow=(0, 1, 0), n=(0, 0, 0, 1, 0))
    g[1][0] = T(1, spow=(0, 1, 1), n=(0, 0, 0, -1, -1)) + T(
        -1, cpow=(0, 1, 1), spow=(1, 0, 0), n=(1, 1, -1, 0, 0)
    )
    g[1][1] = T(1, cpow=(1, 0, 1), n=(0, 1, 0, 0, 0))
    g[1][2] = T(-1, cpow=(0, 1, 0), spow=(0, 0, 1), n=(-1, 0, 0, 0, -1)) + T(
        -1, cpow=(0, 0, 1), spow=(1, 1, 0), n=(0, 1, -1, 1, 0)
    )
    g[2][0] = T(-1, cpow=(0, 1, 0), spow=(1, 0, 1), n=(1, 0, -1, 0, 1)) + T(
        -1, cpow=(0, 0, 1), spow=(0, 1, 0), n=(0, -1, 0, -1, 0)
    )
    g[2][1] = T(1, cpow=(1, 0, 0), spow=(0, 0, 1), n=(0, 0, 0, 0, 1))
    g[2][2] = T(1, cpow=(0, 1, 1), n=(-1, -1, 0, 0, 0)) + T(
        -1, spow=(1, 1, 1), n=(0, 0, -1, 1, 1)
    )
    return g


# ----------------------------------------------------------------------------
# functorial representation constructions (shared by symbolic/numeric entries)
# ----------------------------------------------------------------------------

_PAIRS2 = ((0, 1), (0, 2), (1, 2))  # basis of the exterior square of C^3


def _lambda2_entries(m):
    """Exterior square on e_i ^ e_j (i < j): 2x2 minors of a 3x3 entry matrix."""
    out = [[None] * 3 for _ in range(3)]
    for P, (p0, p1) in enumerate(_PAIRS2):
        for Q, (q0, q1) in enumerate(_PAIRS2):
            out[P][Q] = m[p0][q0] * m[p1][q1] + (-1.0) * (m[p0][q1] * m[p1][q0])
    return out


def _sym_square_entries(m, d):
    """Symmetric square of a d x d entry matrix in an orthonormal monomial basis."""
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    w = [1.0 if i == j else math.sqrt(2.0) for i, j in pairs]
    D = len(pairs)
    out = [[None] * D for _ in range(D)]
    for A, (a, b) in enumerate(pairs):
        for K, (k, l) in enumerate(pairs):
            if a == b:
                C = m[a][k] * m[a][l]
            else:
                C = m[a][k] * m[b][l] + m[b][k] * m[a][l]
            out[A][K] = (w[K] / w[A]) * C
    return out


def _gell_mann_normalized() -> np.ndarray:
    lam = np.zeros((8, 3, 3), dtype=complex)
    lam[0] = [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
    lam[1] = [[0, -1j, 0], [1j, 0, 0], [0, 0, 0]]
    lam[2] = [[1, 0, 0], [0, -1, 0], [0, 0, 0]]
    lam[3] = [[0, 0, 1], [0, 0, 0], [1, 0, 0]]
    lam[4] = [[0, 0, -1j], [0, 0, 0], [1j, 0, 0]]
    lam[5] = [[0, 0, 0], [0, 0, 1], [0, 1, 0]]
    lam[6] = [[0, 0, 0], [0, 0, -1j], [0, 1j, 0]]
    lam[7] = np.diag([1, 1, -2]) / np.sqrt(3.0)
    return lam / np.sqrt(2.0)  # Hilbert-Schmidt orthonormal


def _adjoint_entries(m):
    """Adjoint action on the traceless Hermitian 3x3 matrices, rho_ab = tr(G_a U G_b U*)."""
    G = _gell_mann_normalized()
    sparse = []
    for a in range(8):
        sparse.append(
            [(i, j, G[a, i, j]) for i in range(3) for j in range(3) if abs(G[a, i, j]) > 1e-14]
        )
    out = [[None] * 8 for _ in range(8)]
    for a in range(8):
        for b in range(8):
            acc = None
            for i, j, ga in sparse[a]:
                for k, l, gb in sparse[b]:
                    piece = (ga * gb) * (m[j][k] * m[i][l].conj())
                    acc = piece if acc is None else acc + piece
            out[a][b] = acc
    return out


# ----------------------------------------------------------------------------
# charts
# ----------------------------------------------------------------------------


class GroupChart:
    """A coordinate chart on a compact group with its Haar density.

    ``param_box`` lists per-axis half-open intervals; ``theta_axes`` mark the
    compact angle axes (Gauss-Legendre quadrature) and ``phi_axes`` the
    periodic phase axes (trapezoid sums).  ``volume`` is the exact Haar
    integral of 1 over the box.
    """

    def __init__(self, group, lam, axis_names, param_box, theta_axes, phi_axes, volume):
        self.group = group
        self.lam = float(lam)
        self.axis_names = tuple(axis_names)
        self.param_box = tuple(tuple(map(float, b)) for b in param_box)
        self.theta_axes = tuple(theta_axes)
        self.phi_axes = tuple(phi_axes)
        self.volume = float(volume)

    @property
    def n_axes(self) -> int:
        return len(self.param_box)

    # frequency multiplying integer phase vectors on the phi axes
    @property
    def phase_frequency(self) -> float:
        if self.group == "su3":
            return self.lam ** 0.2
        if self.group == "u1":
            return self.lam
        return 1.0

    def embed(self, params: np.ndarray) -> np.ndarray:
        """Map chart parameters (..., n_axes) to unitary matrices."""
        params = np.asarray(params, dtype=float)
        if params.shape[-1:] != (self.n_axes,):
            params = params.reshape(params.shape + (1,)) if self.n_axes == 1 else params
        if params.shape[-1] != self.n_axes:
            raise ValueError(f"expected trailing axis of size {self.n_axes}")
        if self.group == "u1":
            return np.exp(1j * self.lam * params[..., 0])[..., None, None]
        if self.group == "su2":
            return _su2_euler(params[..., 0], params[..., 1], params[..., 2])
        thetas = [params[..., a] for a in range(3)]
        phis = [params[..., 3 + b] for b in range(5)]
        fund = _su3_fundamental_terms()
        shape = np.broadcast_shapes(*(t.shape for t in thetas))
        out = np.zeros(shape + (3, 3), dtype=complex)
        for i in range(3):
            for j in range(3):
                out[..., i, j] = fund[i][j].evaluate(thetas, phis, self.phase_frequency)
        return out

    def haar_density(self, params: np.ndarray) -> np.ndarray:
        """Haar density relative to Lebesgue measure on the parameter box."""
        params = np.asarray(params, dtype=float)
        if self.group == "u1":
            return np.ones(params.shape[:-1] if params.shape[-1:] == (1,) else params.shape)
        if self.group == "su2":
            return np.sin(params[..., 1]) / (16.0 * np.pi**2)
        t1, t2, t3 = (params[..., a] for a in range(3))
        return (
            np.cos(t1) ** 3
            * np.sin(t1)
            * np.cos(t2)
            * np.sin(t2)
            * np.cos(t3)
            * np.sin(t3)
            / (2.0 * np.pi**5)
        )


def _su2_euler(alpha, beta, gamma):
    a2, b2, g2 = alpha / 2.0, beta / 2.0, gamma / 2.0
    out = np.zeros(np.broadcast_shapes(np.shape(a2), np.shape(b2), np.shape(g2)) + (2, 2), complex)
    out[..., 0, 0] = np.exp(-1j * (a2 + g2)) * np.cos(b2)
    out[..., 0, 1] = -np.exp(-1j * (a2 - g2)) * np.sin(b2)
    out[..., 1, 0] = np.exp(1j * (a2 - g2)) * np.sin(b2)
    out[..., 1, 1] = np.exp(1j * (a2 + g2)) * np.cos(b2)
    return out


def su3_chart(lam: float) -> GroupChart:
    """SU(3) chart at scale ``lam``: volume is exactly 1/lam."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    L = 2.0 * np.pi / lam**0.2
    return GroupChart(
        group="su3",
        lam=lam,
        axis_names=("theta1", "theta2", "theta3", "phi1", "phi2", "phi3", "phi4", "phi5"),
        param_box=((0, np.pi / 2),) * 3 + ((0, L),) * 5,
        theta_axes=(0, 1, 2),
        phi_axes=(3, 4, 5, 6, 7),
        volume=1.0 / lam,
    )


def circle_chart(lam: float) -> GroupChart:
    """U(1) as the circle of circumference 2 pi / lam, embedded via exp(i lam t)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return GroupChart(
        group="u1",
        lam=lam,
        axis_names=("t",),
        param_box=((0, 2.0 * np.pi / lam),),
        theta_axes=(),
        phi_axes=(0,),
        volume=2.0 * np.pi / lam,
    )


def su2_chart() -> GroupChart:
    """SU(2) in z-y-z Euler angles with normalized Haar measure (volume 1)."""
    return GroupChart(
        group="su2",
        lam=1.0,
        axis_names=("alpha", "beta", "gamma"),
        param_box=((0, 2 * np.pi), (0, np.pi), (0, 4 * np.pi)),
        theta_axes=(1,),
        phi_axes=(0, 2),
        volume=1.0,
    )


# ----------------------------------------------------------------------------
# irreducible representations
# ----------------------------------------------------------------------------

_SU3_DIMS = {(0, 0): 1, (1, 0): 3, (0, 1): 3, (2, 0): 6, (0, 2): 6, (1, 1): 8}


@dataclass(frozen=True, eq=False)
class Irrep:
    """An irreducible unitary representation, identified by group and label."""

    group: str
    label: tuple
    dim: int

    @property
    def key(self) -> str:
        return f"{self.group}:{','.join(str(x) for x in self.label)}"


def u1_irrep(k: int) -> Irrep:
    if int(k) != k:
        raise UnsupportedLabel("u1 labels are integers")
    return Irrep("u1", (int(k),), 1)


def su2_irrep(two_j: int) -> Irrep:
    if int(two_j) != two_j or two_j < 0:
        raise UnsupportedLabel("su2 labels are non-negative integers 2j")
    return Irrep("su2", (int(two_j),), int(two_j) + 1)


def su3_irrep(m1: int, m2: int) -> Irrep:
    label = (int(m1), int(m2))
    if label not in _SU3_DIMS:
        raise UnsupportedLabel(
            f"su3 label {label} not supported (need m1, m2 >= 0 with m1 + m2 <= 2)"
        )
    return Irrep("su3", label, _SU3_DIMS[label])


def make_irrep(group: str, label) -> Irrep:
    if group == "u1":
        return u1_irrep(label if np.isscalar(label) else label[0])
    if group == "su2":
        return su2_irrep(label if np.isscalar(label) else label[0])
    if group == "su3":
        return su3_irrep(*label)
    raise UnsupportedLabel(f"no irreps implemented for group {group!r}")


def _sym_power_su2(U: np.ndarray, n: int) -> np.ndarray:
    """Symmetric power S^n of 2x2 matrices, batched, in the orthonormal monomial basis."""
    a, b = U[..., 0, 0], U[..., 0, 1]
    c, d = U[..., 1, 0], U[..., 1, 1]
    out = np.zeros(U.shape[:-2] + (n + 1, n + 1), dtype=complex)
    for l in range(n + 1):
        for k in range(n + 1):
            acc = 0.0
            for p in range(max(0, l - (n - k)), min(k, l) + 1):
                acc = acc + (
                    math.comb(k, p)
                    * math.comb(n - k, l - p)
                    * a**p
                    * c ** (k - p)
                    * b ** (l - p)
                    * d ** (n - k - l + p)
                )
            out[..., l, k] = math.sqrt(math.comb(n, k) / math.comb(n, l)) * acc
    return out


def _entries_from_array(U: np.ndarray, d: int):
    return [[U[..., i, j] for j in range(d)] for i in range(d)]


def _entries_to_array(entries) -> np.ndarray:
    d = len(entries)
    first = np.asarray(entries[0][0])
    out = np.zeros(first.shape + (d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            out[..., i, j] = entries[i][j]
    return out


def irrep_coeff(irrep: Irrep, element: np.ndarray) -> np.ndarray:
    """Matrix coefficients rho(element) for batched group elements.

    ``element`` holds fundamental-representation matrices with shape
    (..., n, n); n = 1, 2, 3 for u1, su2, su3.
    """
    U = np.asarray(element, dtype=complex)
    if irrep.group == "u1":
        if U.ndim < 2 or U.shape[-2:] != (1, 1):
            U = U[..., None, None]
        return U ** irrep.label[0]
    if irrep.group == "su2":
        return _sym_power_su2(U, irrep.label[0])
    m1, m2 = irrep.label
    if (m1, m2) == (0, 0):
        return np.ones(U.shape[:-2] + (1, 1), dtype=complex)
    if (m1, m2) == (1, 0):
        return U
    ent = _entries_from_array(U, 3)
    if (m1, m2) == (0, 1):
        return _entries_to_array(_lambda2_entries(ent))
    if (m1, m2) == (2, 0):
        return _entries_to_array(_sym_square_entries(ent, 3))
    if (m1, m2) == (0, 2):
        return _entries_to_array(_sym_square_entries(_lambda2_entries(ent), 3))
    return _entries_to_array(_adjoint_entries(ent))


_SYMBOLIC_CACHE: dict[tuple, list] = {}


def _su3_symbolic(label: tuple) -> list[list[TrigPoly]]:
    """Chart matrix coefficients of an SU(3) irrep as exact term lists."""
    if label in _SYMBOLIC_CACHE:
        return _SYMBOLIC_CACHE[label]
    fund = _su3_fundamental_terms()
    if label == (0, 0):
        out = [[TrigPoly.one()]]
    elif label == (1, 0):
        out = fund
    elif label == (0, 1):
        out = _lambda2_entries(fund)
    elif label == (2, 0):
        out = _sym_square_entries(fund, 3)
    elif label == (0, 2):
        out = _sym_square_entries(_lambda2_entries(fund), 3)
    elif label == (1, 1):
        out = _adjoint_entries(fund)
    else:
        raise UnsupportedLabel(f"su3 label {label} not supported")
    _SYMBOLIC_CACHE[label] = out
    return out


# ----------------------------------------------------------------------------
# quadrature: factorized integration of term lists against user functions
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Node counts per axis kind: Gauss-Legendre angles, trapezoid phases."""

    theta_nodes: int = 24
    phi_nodes: int = 32

    def doubled(self) -> "QuadratureRule":
        return QuadratureRule(2 * self.theta_nodes, 2 * self.phi_nodes)


@dataclass(frozen=True)
class ChartFunction:
    """A function on a chart, declaring which axes it actually depends on."""

    fn: Callable[..., np.ndarray]
    depends_on: tuple[int, ...] = ()

    def __call__(self, *axis_values):
        return self.fn(*axis_values)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}

# Haar density of the SU(3) chart, split per angle axis: (cos power, sin power).
_SU3_DENSITY_POWS = ((3, 1), (1, 1), (1, 1))
_SU3_DENSITY_CONST = 1.0 / (2.0 * np.pi**5)


def _gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _theta_axis_nodes(lo, hi, n):
    x, w = _gl_nodes(n)
    half = (hi - lo) / 2.0
    return lo + half * (x + 1.0), half * w


def _phi_axis_nodes(lo, hi, n):
    step = (hi - lo) / n
    return lo + step * np.arange(n), np.full(n, step)


_THETA_INT_CACHE: dict[tuple, float] = {}
_PHI_INT_CACHE: dict[tuple, complex] = {}


def _su3_separable_theta(axis: int, cpow: int, spow: int, n_nodes: int) -> float:
    """Integral of cos^cpow sin^spow times the density factor on one angle axis."""
    key = (axis, cpow, spow, n_nodes)
    if key not in _THETA_INT_CACHE:
        dc, ds = _SU3_DENSITY_POWS[axis]
        nodes, weights = _theta_axis_nodes(0.0, np.pi / 2.0, n_nodes)
        vals = np.cos(nodes) ** (cpow + dc) * np.sin(nodes) ** (spow + ds)
        _THETA_INT_CACHE[key] = float(weights @ vals)
    return _THETA_INT_CACHE[key]


def _su3_separable_phi(nk: int, L: float, freq: float, n_nodes: int) -> complex:
    """Trapezoid integral of exp(i freq nk phi) over one full phase period."""
    key = (nk, L, freq, n_nodes)
    if key not in _PHI_INT_CACHE:
        nodes, weights = _phi_axis_nodes(0.0, L, n_nodes)
        _PHI_INT_CACHE[key] = complex(weights @ np.exp(1j * freq * nk * nodes))
    return _PHI_INT_CACHE[key]


class _DenseGrid:
    """Shared tensor grid over the axes a chart function couples to."""

    def __init__(self, chart: GroupChart, dep: tuple[int, ...], rule: QuadratureRule):
        self.dep = dep
        self.nodes = []
        self.weights = []
        for a in dep:
            lo, hi = chart.param_box[a]
            if a in chart.theta_axes:
                nd, w = _theta_axis_nodes(lo, hi, rule.theta_nodes)
            else:
                # a user profile need not be periodic over the (shrinking) phase
                # box, so coupled phase axes get Gauss-Legendre, not trapezoid
                nd, w = _theta_axis_nodes(lo, hi, rule.phi_nodes)
            self.nodes.append(nd)
            self.weights.append(w)
        self.mesh = np.meshgrid(*self.nodes, indexing="ij", sparse=True) if dep else []

    def fvalues(self, f: ChartFunction) -> np.ndarray:
        vals = np.asarray(f(*self.mesh), dtype=complex)
        shape = tuple(len(nd) for nd in self.nodes)
        return np.broadcast_to(vals, shape) if shape else vals


def _su3_term_integral(
    chart: GroupChart,
    key,
    dense: _DenseGrid,
    fvals: np.ndarray,
    rule: QuadratureRule,
) -> complex:
    """Integral of one chart term against f and the Haar density over the box."""
    cpow, spow, nvec = key
    freq = chart.phase_frequency
    total = complex(_SU3_DENSITY_CONST)
    for a in range(3):
        if a in dense.dep:
            continue
        total *= _su3_separable_theta(a, cpow[a], spow[a], rule.theta_nodes)
        if total == 0.0:
            return 0.0
    for b in range(5):
        axis = 3 + b
        if axis in dense.dep:
            continue
        lo, hi = chart.param_box[axis]
        n_nodes = max(rule.phi_nodes, 8 * (abs(nvec[b]) + 1))
        total *= _su3_separable_phi(nvec[b], hi - lo, freq, n_nodes)
        if abs(total) < 1e-300:
            return 0.0
    if not dense.dep:
        return total
    val = fvals.astype(complex, copy=True)
    for pos, a in enumerate(dense.dep):
        nd, w = dense.nodes[pos], dense.weights[pos]
        if a in chart.theta_axes:
            dc, ds = _SU3_DENSITY_POWS[a]
            fac = w * np.cos(nd) ** (cpow[a] + dc) * np.sin(nd) ** (spow[a] + ds)
        else:
            fac = w * np.exp(1j * freq * nvec[a - 3] * nd)
        val = np.tensordot(fac, val, axes=(0, 0))
    return total * complex(val)


def _su3_integrate_poly(
    chart: GroupChart,
    poly: TrigPoly,
    f: ChartFunction,
    rule: QuadratureRule,
    dense: _DenseGrid,
    fvals: np.ndarray,
) -> complex:
    return sum(
        coef * _su3_term_integral(chart, key, dense, fvals, rule)
        for key, coef in poly.terms.items()
    )


def _dense_chart_quadrature(chart: GroupChart, rule: QuadratureRule):
    """Full tensor grid over every axis (u1 and su2 charts only)."""
    nodes, weights = [], []
    for a in range(chart.n_axes):
        lo, hi = chart.param_box[a]
        if a in chart.theta_axes:
            nd, w = _theta_axis_nodes(lo, hi, rule.theta_nodes)
        elif chart.group == "u1":
            # the circle box shrinks with lam and user profiles need not be
            # periodic over it, so use Gauss-Legendre instead of trapezoid
            nd, w = _theta_axis_nodes(lo, hi, rule.phi_nodes)
        else:
            nd, w = _phi_axis_nodes(lo, hi, rule.phi_nodes)
        nodes.append(nd)
        weights.append(w)
    mesh = np.meshgrid(*nodes, indexing="ij", sparse=True)
    wmesh = np.meshgrid(*weights, indexing="ij", sparse=True)
    wtot = wmesh[0].astype(float)
    for w in wmesh[1:]:
        wtot = wtot * w
    params = np.stack(np.broadcast_arrays(*mesh), axis=-1)
    return params, mesh, np.broadcast_to(wtot, params.shape[:-1])


# ----------------------------------------------------------------------------
# Fourier coefficients, Gram matrices, decay scans
# ----------------------------------------------------------------------------


@dataclass(eq=False)
class FourierCoefficientSet:
    """Matrix Fourier coefficients of a function over one chart.

    ``coefficients[key]`` is the (d, d) array with entries
    sqrt(d) / volume * integral of f * conj(rho_ij); ``noise_floor`` is the
    largest entry shift observed when the quadrature rule is doubled.
    """

    group: str
    lam: float
    labels: tuple[tuple, ...]
    coefficients: dict
    noise_floor: float
    rule: QuadratureRule

    def entry(self, label, i: int, j: int) -> complex:
        return complex(self.coefficients[tuple(label)][i, j])

    def max_abs(self, label=None) -> float:
        mats = (
            [self.coefficients[tuple(label)]]
            if label is not None
            else list(self.coefficients.values())
        )
        return max(float(np.abs(m).max()) for m in mats)

    def synthesize(self, chart: GroupChart, params: np.ndarray) -> np.ndarray:
        """Evaluate the truncated Fourier series at chart parameters."""
        U = chart.embed(params)
        out = 0.0
        for label in self.labels:
            rho = irrep_coeff(make_irrep(self.group, label), U)
            a = self.coefficients[label]
            out = out + math.sqrt(a.shape[0]) * np.einsum("ij,...ij->...", a, rho)
        return np.asarray(out)


def _fourier_once(f, chart, irreps, rule) -> dict:
    out = {}
    if chart.group == "su3":
        dep = tuple(sorted(f.depends_on))
        dense = _DenseGrid(chart, dep, rule)
        fvals = dense.fvalues(f)
        for irrep in irreps:
            sym = _su3_symbolic(irrep.label)
            d = irrep.dim
            mat = np.zeros((d, d), dtype=complex)
            for i in range(d):
                for j in range(d):
                    # coefficient against rho_ij uses conj(rho_ij) = (rho(g^-1))_ji
                    mat[i, j] = _su3_integrate_poly(
                        chart, sym[i][j].conj(), f, rule, dense, fvals
                    )
            out[irrep.label] = math.sqrt(d) / chart.volume * mat
        return out
    params, mesh, weights = _dense_chart_quadrature(chart, rule)
    fvals = np.asarray(f(*(mesh[a] for a in f.depends_on)), dtype=complex)
    density = chart.haar_density(params)
    base = (np.broadcast_to(fvals, weights.shape) * weights * density).ravel()
    U = chart.embed(params)
    for irrep in irreps:
        rho = irrep_coeff(irrep, U).reshape(-1, irrep.dim, irrep.dim)
        mat = np.tensordot(base, rho.conj(), axes=(0, 0))
        out[irrep.label] = math.sqrt(irrep.dim) / chart.volume * mat
    return out


def fourier_coefficients(
    f: ChartFunction,
    chart: GroupChart,
    irreps,
    rule: QuadratureRule | None = None,
    tolerance: float = 1e-8,
    check: bool = True,
) -> FourierCoefficientSet:
    """Matrix Fourier coefficients of ``f`` against the listed irreps.

    Every result is recomputed under a doubled rule; the largest entry shift
    becomes the reported noise floor and, when ``check`` is set, a shift above
    ``tolerance`` raises :class:`QuadratureUnderresolved`.
    """
    rule = rule or QuadratureRule()
    irreps = list(irreps)
    coarse = _fourier_once(f, chart, irreps, rule)
    fine = _fourier_once(f, chart, irreps, rule.doubled())
    floor = 0.0
    for label in coarse:
        floor = max(floor, float(np.abs(coarse[label] - fine[label]).max()))
    if check and floor > tolerance:
        raise QuadratureUnderresolved(
            f"doubling the rule moved coefficients by {floor:.3e} > {tolerance:g}"
        )
    return FourierCoefficientSet(
        group=chart.group,
        lam=chart.lam,
        labels=tuple(ir.label for ir in irreps),
        coefficients=fine,
        noise_floor=floor,
        rule=rule,
    )


def orthonormality_gram(irreps, chart: GroupChart, rule: QuadratureRule | None = None):
    """Gram matrix of the scaled matrix coefficients sqrt(d) rho_ij under Haar.

    Returns (index list, Gram matrix, max deviation from identity).  Exact
    Schur orthogonality makes the Gram the identity; the deviation measures
    chart, representation, and quadrature consistency all at once.
    """
    rule = rule or QuadratureRule()
    irreps = list(irreps)
    index = [
        (ir.label, i, j) for ir in irreps for i in range(ir.dim) for j in range(ir.dim)
    ]
    if chart.group == "su3":
        dense = _DenseGrid(chart, (), rule)
        fone = np.asarray(1.0, dtype=complex)
        polys = []
        dims = []
        for ir in irreps:
            sym = _su3_symbolic(ir.label)
            for i in range(ir.dim):
                for j in range(ir.dim):
                    polys.append(sym[i][j])
                    dims.append(ir.dim)
        n = len(polys)
        # pairs with disjoint phase content integrate to zero: skip them early
        phase_sets = [frozenset(key[2] for key in pl.terms) for pl in polys]
        G = np.zeros((n, n), dtype=complex)
        for p in range(n):
            for q in range(n):
                if phase_sets[p].isdisjoint(phase_sets[q]):
                    continue
                prod = polys[p] * polys[q].conj()
                G[p, q] = (
                    math.sqrt(dims[p] * dims[q])
                    / chart.volume
                    * _su3_integrate_poly(chart, prod, None, rule, dense, fone)
                )
    else:
        params, _, weights = _dense_chart_quadrature(chart, rule)
        density = chart.haar_density(params)
        U = chart.embed(params)
        cols = []
        for ir in irreps:
            rho = irrep_coeff(ir, U)
            for i in range(ir.dim):
                for j in range(ir.dim):
                    cols.append(math.sqrt(ir.dim) * rho[..., i, j])
        stack = np.stack(cols, axis=-1).reshape(-1, len(cols))
        base = (weights * density).reshape(-1, 1)
        G = (stack.conj() * base).T @ stack / chart.volume
    deviation = float(np.abs(G - np.eye(len(index))).max())
    return index, G, deviation


@dataclass(eq=False)
class DecayTable:
    """Peak Fourier coefficient magnitude of a fixed profile across chart scales."""

    irrep_label: tuple
    rows: list  # (lam, max_abs, noise_floor)
    fitted_exponent: float

    def to_csv(self) -> str:
        lines = ["lambda,max_abs,noise_floor,fitted_exponent"]
        for lam, mx, floor in self.rows:
            lines.append(f"{lam:.12g},{mx:.15g},{floor:.6g},{self.fitted_exponent:.9g}")
        return "\n".join(lines) + "\n"


def decay_scan(
    f: ChartFunction,
    irrep: Irrep,
    lambdas,
    rule: QuadratureRule | None = None,
) -> DecayTable:
    """Track max |coefficient| of a fixed parameter-space profile as lam grows.

    The profile keeps its functional form in chart coordinates while the phase
    axes' period shrinks like lam^{-1/5} (u1: the circle shrinks like 1/lam),
    so the scan probes how the collapsing directions suppress the harmonics.
    """
    rows = []
    for lam in lambdas:
        chart = su3_chart(lam) if irrep.group == "su3" else circle_chart(lam)
        coeffs = fourier_coefficients(f, chart, [irrep], rule=rule, check=False)
        rows.append((float(lam), coeffs.max_abs(irrep.label), coeffs.noise_floor))
    lams = np.array([r[0] for r in rows])
    vals = np.array([max(r[1], 1e-300) for r in rows])
    if len(rows) >= 2 and np.all(vals > 0):
        slope = np.polyfit(np.log(lams), np.log(vals), 1)[0]
    else:
        slope = float("nan")
    return DecayTable(irrep_label=irrep.label, rows=rows, fitted_exponent=float(slope))


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------


def coefficients_to_csv(cs: FourierCoefficientSet) -> str:
    lines = ["irrep,i,j,re,im"]
    for label in cs.labels:
        mat = cs.coefficients[label]
        name = "(" + " ".join(str(x) for x in label) + ")"
        for i in range(mat.shape[0]):
            for j in range(mat.shape[1]):
                lines.append(f"{name},{i},{j},{mat[i, j].real:.15g},{mat[i, j].imag:.15g}")
    return "\n".join(lines) + "\n"


def coefficients_to_json(cs: FourierCoefficientSet) -> str:
    payload = {
        "group": cs.group,
        "lambda": cs.lam,
        "noise_floor": cs.noise_floor,
        "rule": {"theta_nodes": cs.rule.theta_nodes, "phi_nodes": cs.rule.phi_nodes},
        "coefficients": [
            {
                "label": list(label),
                "re": cs.coefficients[label].real.tolist(),
                "im": cs.coefficients[label].imag.tolist(),
            }
            for label in cs.labels
        ],
    }
    return json.dumps(payload)


def coefficients_from_json(text: str) -> FourierCoefficientSet:
    payload = json.loads(text)
    labels = []
    coefficients = {}
    for item in payload["coefficients"]:
        label = tuple(item["label"])
        labels.append(label)
        coefficients[label] = np.array(item["re"]) + 1j * np.array(item["im"])
    return FourierCoefficientSet(
        group=payload["group"],
        lam=float(payload["lambda"]),
        labels=tuple(labels),
        coefficients=coefficients,
        noise_floor=float(payload["noise_floor"]),
        rule=QuadratureRule(**payload["rule"]),
    )
