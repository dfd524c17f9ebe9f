"""Compact Lie algebras, root-space decompositions, and invariant complex structures.

Every algebra produced by :func:`build_algebra` comes in a Killing-orthonormal,
root-adapted basis: the first ``r`` basis vectors span a Cartan subalgebra and
the remaining ones come in consecutive pairs ``(X_p, Y_p)``, one per positive
root, oriented so that ``[h, X_p] = alpha_p(h) Y_p`` with ``alpha_p`` the
positive root read as a rotation rate.  Structure constants ``c[k, i, j]`` mean
``[b_i, b_j] = sum_k c[k, i, j] b_k`` and are totally antisymmetric in this
normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateResult,
    EmbeddingFailure,
    NotAlmostComplex,
    NotBlockDiagonal,
    NotSemisimple,
    NotSubalgebra,
    UnknownAlgebra,
)
from .octonion import standard_derivations

SUPPORTED_ALGEBRAS = ("u1", "su2", "su2_su2", "su3", "g2")

# Deterministic seeds for the generic-element searches.
_GENERIC_SEEDS = (20240811, 907, 42424243, 5550123)

_ALGEBRA_CACHE: dict[str, "LieAlgebraSpec"] = {}


@dataclass(frozen=True, eq=False)
class LieAlgebraSpec:
    """A finite-dimensional real Lie algebra in a fixed basis."""

    name: str
    dim: int
    basis_labels: tuple[str, ...]
    structure_constants: np.ndarray  # (dim, dim, dim), index order (k, i, j)
    killing_form: np.ndarray  # (dim, dim)

    def bracket(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Lie bracket of coefficient vectors (complex vectors allowed)."""
        return np.einsum("kij,...i,...j->...k", self.structure_constants, u, v)

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ad(x) = [x, .] acting on coefficient vectors."""
        return np.einsum("kij,i->kj", self.structure_constants, x)


@dataclass(frozen=True, eq=False)
class RootSystem:
    """Cartan subalgebra location and positive-root data for a fixed basis.

    ``positive_roots[p, a]`` is the rotation rate of ``ad(t_a)`` on the plane
    ``root_space_pairs[p]``, where ``t_a`` is the basis vector at
    ``cartan_basis_indices[a]``.
    """

    cartan_dim: int
    cartan_basis_indices: tuple[int, ...]
    positive_roots: np.ndarray  # (n_pos, cartan_dim)
    root_space_pairs: tuple[tuple[int, int], ...]
    semisimple: bool = True

    @property
    def n_positive(self) -> int:
        return len(self.root_space_pairs)

    def root_lengths_squared(self) -> np.ndarray:
        return np.einsum("pa,pa->p", self.positive_roots, self.positive_roots)


@dataclass(frozen=True, eq=False)
class SamelsonStructure:
    """An invariant almost complex structure on an even-dimensional compact group.

    ``J`` acts on the Lie algebra in the spec's basis; ``cartan_block`` is its
    restriction to the Cartan subalgebra and ``root_signs[p] = +1`` means the
    ``-i`` eigenspace of ``J`` contains the lowering direction of root ``p``
    (the choice whose all-plus pattern closes into a Borel-type subalgebra).
    """

    algebra: LieAlgebraSpec
    roots: RootSystem
    J: np.ndarray
    cartan_block: np.ndarray
    root_signs: tuple[int, ...]
    closure_residual: float


@dataclass(frozen=True, eq=False)
class SubalgebraEmbedding:
    """A reductive subalgebra with a bracket-invariant complement."""

    ambient: LieAlgebraSpec
    sub_basis: np.ndarray  # (dim, sub_dim) orthonormal columns
    complement_basis: np.ndarray  # (dim, dim - sub_dim)
    shared_cartan: tuple[int, ...]
    sub_indices: tuple[int, ...]
    complement_indices: tuple[int, ...]
    roots: RootSystem


@dataclass(frozen=True, eq=False)
class BlockReport:
    """How an endomorphism interacts with a subalgebra/complement splitting."""

    off_block_sub_to_complement: float
    off_block_complement_to_sub: float
    sub_block: np.ndarray
    complement_block: np.ndarray
    sub_squared_residual: float
    complement_squared_residual: float


# ----------------------------------------------------------------------------
# construction helpers
# ----------------------------------------------------------------------------


def _vectorize(mat: np.ndarray) -> np.ndarray:
    m = np.asarray(mat)
    return np.concatenate([m.real.ravel(), m.imag.ravel()])


def _structure_constants_from_matrices(mats: list[np.ndarray]) -> np.ndarray:
    """Expand pairwise commutators of a matrix basis in that same basis."""
    dim = len(mats)
    V = np.stack([_vectorize(m) for m in mats], axis=1)
    pinv = np.linalg.pinv(V)
    c = np.zeros((dim, dim, dim))
    for i in range(dim):
        for j in range(i + 1, dim):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            w = _vectorize(comm)
            coef = pinv @ w
            if np.linalg.norm(V @ coef - w) > 1e-9 * (1.0 + np.linalg.norm(w)):
                raise DegenerateResult(
                    f"commutator [{i},{j}] does not lie in the span of the basis"
                )
            c[:, i, j] = coef
            c[:, j, i] = -coef
    return c


def _killing_from_constants(c: np.ndarray) -> np.ndarray:
    return np.einsum("kal,lbk->ab", c, c)


def _orthonormalize_killing(c: np.ndarray) -> np.ndarray:
    """Change basis so that -Killing becomes the identity matrix."""
    B = -_killing_from_constants(c)
    vals, vecs = np.linalg.eigh(B)
    if vals.min() <= 1e-10 * max(vals.max(), 1.0):
        raise NotSemisimple("Killing form is not negative definite")
    S = vecs @ np.diag(vals**-0.5) @ vecs.T
    Sinv = vecs @ np.diag(vals**0.5) @ vecs.T
    return np.einsum("kc,cab,ai,bj->kij", Sinv, c, S, S)


def _nullspace(A: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    _, s, vt = np.linalg.svd(A)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(A.shape[1])
    rank = int(np.sum(s > rtol * s[0]))
    return vt[rank:].T


def _ad_matrix(c: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("kij,i->kj", c, x)


def _canonical_plane_sign(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Fix the overall +- ambiguity of a plane frame without changing orientation.
    m = int(np.argmax(np.abs(X)))
    if X[m] < 0:
        return -X, -Y
    return X, Y


def _positivity_functional(rank: int) -> np.ndarray:
    return 1.0 / np.pi ** np.arange(rank)


def _find_cartan(c: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the centralizer of a generic element (a Cartan)."""
    dim = c.shape[0]
    best = None
    for seed in _GENERIC_SEEDS:
        xi = np.random.default_rng(seed).standard_normal(dim)
        Z = _nullspace(_ad_matrix(c, xi))
        if best is None or Z.shape[1] < best.shape[1]:
            best = Z
    if best is None or best.shape[1] == 0:
        raise DegenerateResult("centralizer search failed")
    return best


def _split_root_planes(
    c: np.ndarray, cartan: np.ndarray
) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray, float]]]:
    """Split off rotation 2-planes of a generic Cartan action.

    Returns an orthonormal Cartan basis and a list of (X, Y, mu) triples with
    ``ad(h*) X = mu Y``, ``mu > 0``, for the generic combination h* used.
    """
    dim = c.shape[0]
    r = cartan.shape[1]
    for seed in _GENERIC_SEEDS:
        w = np.random.default_rng(seed).standard_normal(r)
        h = cartan @ w
        A = _ad_matrix(c, h)
        K = A @ A
        vals, vecs = np.linalg.eigh(K)
        scale = max(np.abs(vals).max(), 1.0)
        zero = np.abs(vals) < 1e-8 * scale
        if int(zero.sum()) != r:
            continue
        nz_idx = np.where(~zero)[0]
        groups: list[list[int]] = []
        for idx in nz_idx:
            if groups and abs(vals[idx] - vals[groups[-1][0]]) < 1e-7 * scale:
                groups[-1].append(idx)
            else:
                groups.append([idx])
        if any(len(g) != 2 for g in groups):
            continue
        planes = []
        ok = True
        for g in groups:
            mu = float(np.sqrt(-vals[g[0]]))
            X = vecs[:, g[0]]
            Y = A @ X / mu
            if abs(np.linalg.norm(Y) - 1.0) > 1e-8 or abs(Y @ X) > 1e-8:
                ok = False
                break
            planes.append((X, Y, mu))
        if not ok:
            continue
        t_basis = vecs[:, zero]
        # canonical per-vector sign for the Cartan frame
        cols = []
        for a in range(r):
            v = t_basis[:, a]
            m = int(np.argmax(np.abs(v)))
            cols.append(-v if v[m] < 0 else v)
        return np.stack(cols, axis=1), planes
    raise DegenerateResult("could not split root planes with a generic Cartan element")


def _oriented_positive_planes(
    c: np.ndarray, t_basis: np.ndarray, planes: list[tuple[np.ndarray, np.ndarray, float]]
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Attach root covectors, flip planes to positive roots, sort deterministically."""
    r = t_basis.shape[1]
    ell = _positivity_functional(r)
    ads = [_ad_matrix(c, t_basis[:, a]) for a in range(r)]
    out = []
    for X, Y, _ in planes:
        alpha = np.array([Y @ (ads[a] @ X) for a in range(r)])
        for a in range(r):
            resX = ads[a] @ X - alpha[a] * Y
            resY = ads[a] @ Y + alpha[a] * X
            if np.linalg.norm(resX) > 1e-8 or np.linalg.norm(resY) > 1e-8:
                raise DegenerateResult("Cartan action does not preserve a root plane")
        val = float(alpha @ ell)
        if abs(val) < 1e-8:
            raise DegenerateResult("positivity functional is degenerate on a root")
        if val < 0:
            X, Y, alpha = Y, X, -alpha
        X, Y = _canonical_plane_sign(X, Y)
        out.append((X, Y, alpha))
    out.sort(key=lambda t: float(t[2] @ ell))
    return out


def _root_adapt(c: np.ndarray) -> np.ndarray:
    """Rotate a Killing-orthonormal basis into the canonical root-adapted layout."""
    cartan = _find_cartan(c)
    t_basis, planes = _split_root_planes(c, cartan)
    oriented = _oriented_positive_planes(c, t_basis, planes)
    cols = [t_basis[:, a] for a in range(t_basis.shape[1])]
    for X, Y, _ in oriented:
        cols.append(X)
        cols.append(Y)
    T = np.stack(cols, axis=1)
    if np.linalg.norm(T.T @ T - np.eye(c.shape[0])) > 1e-8:
        raise DegenerateResult("root-adapted frame is not orthogonal")
    return np.einsum("kc,cab,ai,bj->kij", T.T, c, T, T)


def _labels(rank: int, n_planes: int) -> tuple[str, ...]:
    labels = [f"h{a + 1}" for a in range(rank)]
    for p in range(n_planes):
        labels += [f"x{p + 1}", f"y{p + 1}"]
    return tuple(labels)


def _check_jacobi(c: np.ndarray, tol: float = 1e-9) -> None:
    jac = (
        np.einsum("mij,kml->kijl", c, c)
        + np.einsum("mjl,kmi->kijl", c, c)
        + np.einsum("mli,kmj->kijl", c, c)
    )
    worst = float(np.abs(jac).max())
    if worst > tol:
        raise DegenerateResult(f"Jacobi identity violated: max residual {worst:.3e}")


def _su2_generators() -> list[np.ndarray]:
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    return [-0.5j * s for s in (s1, s2, s3)]


def _su3_generators() -> list[np.ndarray]:
    lam = [
        np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex),
        np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex),
        np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex),
        np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex),
        np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex),
        np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex),
        np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex),
        np.array([[1, 0, 0], [0, 1, 0], [0, 0, -2]], dtype=complex) / np.sqrt(3.0),
    ]
    return [-0.5j * m for m in lam]


def _g2_basis_matrices() -> list[np.ndarray]:
    """A 14-matrix basis of the octonion derivation algebra, 7x7 real."""
    stack = np.stack([D.ravel() for D in standard_derivations()])
    _, s, vt = np.linalg.svd(stack, full_matrices=False)
    rank = int(np.sum(s > 1e-9 * s[0]))
    if rank != 14:
        raise DegenerateResult(f"derivation span has dimension {rank}, expected 14")
    return [vt[k].reshape(7, 7) for k in range(14)]


def _raw_generators(name: str) -> list[np.ndarray]:
    if name == "su2":
        return _su2_generators()
    if name == "su3":
        return _su3_generators()
    if name == "su2_su2":
        gens = []
        for t in _su2_generators():
            M = np.zeros((4, 4), dtype=complex)
            M[:2, :2] = t
            gens.append(M)
        for t in _su2_generators():
            M = np.zeros((4, 4), dtype=complex)
            M[2:, 2:] = t
            gens.append(M)
        return gens
    if name == "g2":
        return _g2_basis_matrices()
    raise UnknownAlgebra(f"unsupported algebra name {name!r}")


def build_algebra(name: str) -> LieAlgebraSpec:
    """Construct one of the supported compact algebras in canonical form.

    Supported names: ``u1``, ``su2``, ``su2_su2``, ``su3``, ``g2``.  All
    semisimple results use a -Killing-orthonormal root-adapted basis (Cartan
    first, then one oriented (X, Y) pair per positive root, sorted by a fixed
    positivity functional).  ``u1`` keeps a single Euclidean basis vector with
    identically zero bracket and Killing form.
    """
    if name in _ALGEBRA_CACHE:
        return _ALGEBRA_CACHE[name]
    if name not in SUPPORTED_ALGEBRAS:
        raise UnknownAlgebra(
            f"unknown algebra {name!r}; supported: {', '.join(SUPPORTED_ALGEBRAS)}"
        )
    if name == "u1":
        spec = LieAlgebraSpec(
            name="u1",
            dim=1,
            basis_labels=("t1",),
            structure_constants=np.zeros((1, 1, 1)),
            killing_form=np.zeros((1, 1)),
        )
        _ALGEBRA_CACHE[name] = spec
        return spec
    mats = _raw_generators(name)
    c = _structure_constants_from_matrices(mats)
    c = _orthonormalize_killing(c)
    c = _root_adapt(c)
    _check_jacobi(c)
    killing = _killing_from_constants(c)
    dim = c.shape[0]
    if np.linalg.norm(killing + np.eye(dim)) > 1e-8:
        raise DegenerateResult("orthonormalization did not reach -identity Killing form")
    rank = dim - 2 * _count_planes(c)
    spec = LieAlgebraSpec(
        name=name,
        dim=dim,
        basis_labels=_labels(rank, (dim - rank) // 2),
        structure_constants=c,
        killing_form=killing,
    )
    _ALGEBRA_CACHE[name] = spec
    return spec


def _count_planes(c: np.ndarray) -> int:
    cartan = _find_cartan(c)
    return (c.shape[0] - cartan.shape[1]) // 2


# ----------------------------------------------------------------------------
# root decomposition
# ----------------------------------------------------------------------------


def _try_cartan_axes(
    c: np.ndarray, cand: tuple[int, ...], tol: float = 1e-8
) -> list[tuple[int, int]] | None:
    """Check whether coordinate axes ``cand`` span a Cartan with axis-aligned planes.

    Returns per-plane index pairs on success (oriented later), None when the
    candidate fails.  Uses a generic combination of the candidate axes and
    requires every non-candidate axis to rotate cleanly into a unique partner.
    """
    dim = c.shape[0]
    r = len(cand)
    rest = [i for i in range(dim) if i not in cand]
    for seed in _GENERIC_SEEDS:
        w = np.random.default_rng(seed).standard_normal(r)
        h = np.zeros(dim)
        h[list(cand)] = w
        A = _ad_matrix(c, h)
        if np.abs(A[:, list(cand)]).max() > tol:
            return None  # candidate axes do not commute with each other
        partner: dict[int, int] = {}
        rate: dict[int, float] = {}
        ok = True
        for i in rest:
            v = A[:, i]
            j = int(np.argmax(np.abs(v)))
            if j in cand or j == i or abs(v[j]) < 1e-7:
                ok = False
                break
            res = v.copy()
            res[j] = 0.0
            if np.linalg.norm(res) > tol * max(1.0, abs(v[j])):
                ok = False
                break
            partner[i] = j
            rate[i] = float(v[j])
        if not ok:
            continue  # maybe the combination was unlucky; retry with a new seed
        if any(partner.get(partner[i]) != i for i in rest):
            return None
        pairs = sorted({(min(i, partner[i]), max(i, partner[i])) for i in rest})
        if len(pairs) * 2 != len(rest):
            return None
        return pairs
    return None


def root_decomposition(spec: LieAlgebraSpec) -> RootSystem:
    """Locate the Cartan subalgebra and oriented root planes in the spec's basis.

    The rank is computed basis-free (dimension of a generic centralizer); the
    Cartan is then identified as the lexicographically first set of coordinate
    axes that commute pairwise and whose generic combination rotates every
    remaining axis into a unique partner axis.  This succeeds exactly when the
    input basis is root-adapted (as :func:`build_algebra` guarantees) and
    raises :class:`DegenerateResult` otherwise.  Abelian input returns a
    Cartan-only system flagged ``semisimple=False``.
    """
    c = np.asarray(spec.structure_constants, dtype=float)
    dim = c.shape[0]
    if np.abs(c).max() == 0.0:
        return RootSystem(
            cartan_dim=dim,
            cartan_basis_indices=tuple(range(dim)),
            positive_roots=np.zeros((0, dim)),
            root_space_pairs=(),
            semisimple=False,
        )
    kvals = np.linalg.eigvalsh(-_killing_from_constants(c))
    if kvals.min() <= 1e-10 * max(kvals.max(), 1.0):
        raise NotSemisimple("Killing form is not negative definite")
    r = _find_cartan(c).shape[1]
    if (dim - r) % 2 != 0:
        raise DegenerateResult("rank and dimension have incompatible parity")

    from itertools import combinations

    found = None
    for cand in combinations(range(dim), r):
        pairs = _try_cartan_axes(c, cand)
        if pairs is not None:
            found = (cand, pairs)
            break
    if found is None:
        raise DegenerateResult(
            "basis is not root-adapted: no axis-aligned Cartan with clean root planes"
        )
    cand, pairs = found
    ads = [c[:, a, :] for a in cand]  # ad(e_a)[k, j] = c[k, a, j]
    ell = _positivity_functional(r)
    eye = np.eye(dim)
    entries = []
    for i, j in pairs:
        alpha = np.array([ads[a][j, i] for a in range(r)])
        for a in range(r):
            res_i = np.linalg.norm(ads[a][:, i] - alpha[a] * eye[:, j])
            res_j = np.linalg.norm(ads[a][:, j] + alpha[a] * eye[:, i])
            if res_i > 1e-8 or res_j > 1e-8:
                raise DegenerateResult("Cartan action is not a clean rotation on a plane")
        val = float(alpha @ ell)
        if abs(val) < 1e-8:
            raise DegenerateResult("positivity functional degenerate on a root")
        if val < 0:
            i, j = j, i
            alpha = -alpha
        entries.append((float(alpha @ ell), (i, j), alpha))
    entries.sort(key=lambda t: t[0])
    return RootSystem(
        cartan_dim=r,
        cartan_basis_indices=tuple(cand),
        positive_roots=np.stack([e[2] for e in entries]),
        root_space_pairs=tuple(e[1] for e in entries),
        semisimple=True,
    )


# ----------------------------------------------------------------------------
# subalgebra embedding
# ----------------------------------------------------------------------------


def embed_su3_in_g2(spec: LieAlgebraSpec, tolerance: float = 1e-10) -> SubalgebraEmbedding:
    """Split an algebra with G2-type roots into su(3) and its 6-dim complement.

    The subalgebra is the Cartan plus the three long-root planes; the
    complement collects the short-root planes.  Raises
    :class:`EmbeddingFailure` when the root system is not of G2 type or when
    the expected bracket relations fail.
    """
    roots = root_decomposition(spec)
    if not roots.semisimple or roots.cartan_dim != 2 or roots.n_positive != 6:
        raise EmbeddingFailure("root system is not of G2 type (need rank 2, 6 positive roots)")
    lens = roots.root_lengths_squared()
    long_mask = lens > 0.5 * (lens.min() + lens.max())
    if int(long_mask.sum()) != 3:
        raise EmbeddingFailure("expected exactly 3 long roots")
    ratio = lens[long_mask].mean() / lens[~long_mask].mean()
    if abs(ratio - 3.0) > 1e-6:
        raise EmbeddingFailure(f"long/short length ratio {ratio:.6f} is not 3")

    sub_idx = list(roots.cartan_basis_indices)
    for p in range(6):
        if long_mask[p]:
            sub_idx.extend(roots.root_space_pairs[p])
    comp_idx = [i for p in range(6) if not long_mask[p] for i in roots.root_space_pairs[p]]
    c = spec.structure_constants
    sub = np.array(sub_idx)
    comp = np.array(comp_idx)
    closure = float(np.abs(c[np.ix_(comp, sub, sub)]).max())
    if closure > tolerance:
        raise EmbeddingFailure(f"candidate subalgebra is not closed: residual {closure:.3e}")
    reductive = float(np.abs(c[np.ix_(sub, sub, comp)]).max())
    if reductive > tolerance:
        raise EmbeddingFailure(
            f"complement is not bracket-invariant: residual {reductive:.3e}"
        )
    eye = np.eye(spec.dim)
    return SubalgebraEmbedding(
        ambient=spec,
        sub_basis=eye[:, sub],
        complement_basis=eye[:, comp],
        shared_cartan=roots.cartan_basis_indices,
        sub_indices=tuple(sub_idx),
        complement_indices=tuple(comp_idx),
        roots=roots,
    )


# ----------------------------------------------------------------------------
# invariant complex structures
# ----------------------------------------------------------------------------


def _default_cartan_rotation(rank: int) -> np.ndarray:
    J0 = np.zeros((rank, rank))
    for a in range(0, rank, 2):
        J0[a + 1, a] = 1.0
        J0[a, a + 1] = -1.0
    return J0


def _normalize_signs(signs, n_pos: int) -> tuple[int, ...]:
    if signs is None:
        return (1,) * n_pos
    if isinstance(signs, dict):
        out = [1] * n_pos
        for k, v in signs.items():
            out[int(k)] = int(v)
        signs = out
    signs = tuple(int(s) for s in signs)
    if len(signs) != n_pos or any(s not in (-1, 1) for s in signs):
        raise ValueError(f"signs must be +-1 for each of the {n_pos} positive roots")
    return signs


def build_samelson(
    spec: LieAlgebraSpec,
    cartan_rotation: np.ndarray | None = None,
    signs=None,
    *,
    validate: bool = True,
    tolerance: float = 1e-10,
) -> SamelsonStructure:
    """Assemble an invariant almost complex structure from plane-rotation data.

    ``cartan_rotation`` is an orthogonal complex structure on the Cartan
    subalgebra (defaults to the block 90-degree rotation pairing consecutive
    Cartan directions); ``signs`` picks, per positive root, which half of the
    complexified root plane joins the ``-i`` eigenspace (+1 = lowering side;
    all +1 is the Borel-type choice, which always closes).

    With ``validate=True`` the spanned eigenspace is checked to be a complex
    subalgebra by projecting all pairwise brackets back onto its span;
    a residual above ``tolerance`` raises :class:`NotSubalgebra`.  Passing
    ``validate=False`` returns the (possibly non-integrable) structure with the
    residual recorded for diagnostics.
    """
    roots = root_decomposition(spec)
    if not roots.semisimple:
        raise NotSemisimple("Samelson construction needs a semisimple algebra")
    if spec.dim % 2 != 0 or roots.cartan_dim % 2 != 0:
        raise NotAlmostComplex(
            f"no invariant complex structure: dim {spec.dim} / rank {roots.cartan_dim} odd"
        )
    r = roots.cartan_dim
    if cartan_rotation is None:
        J0 = _default_cartan_rotation(r)
    else:
        J0 = np.asarray(cartan_rotation, dtype=float)
        if J0.shape != (r, r):
            raise NotAlmostComplex(f"cartan_rotation must be {r}x{r}")
        if np.linalg.norm(J0 @ J0 + np.eye(r)) > 1e-10 or np.linalg.norm(
            J0.T @ J0 - np.eye(r)
        ) > 1e-10:
            raise NotAlmostComplex("cartan_rotation must be orthogonal with square -1")
    signs = _normalize_signs(signs, roots.n_positive)

    J = np.zeros((spec.dim, spec.dim))
    cidx = list(roots.cartan_basis_indices)
    J[np.ix_(cidx, cidx)] = J0
    for p, (i, j) in enumerate(roots.root_space_pairs):
        J[j, i] = signs[p]
        J[i, j] = -signs[p]
    if np.linalg.norm(J @ J + np.eye(spec.dim)) > 1e-10:
        raise NotAlmostComplex("assembled structure does not square to -identity")

    # Basis of the -i eigenspace: u + i J u on the Cartan, X + i s Y per root.
    eye = np.eye(spec.dim)
    cart_cols: list[np.ndarray] = []
    for a in cidx:
        w = eye[:, a] + 1j * (J @ eye[:, a])
        cand = np.stack(cart_cols + [w], axis=1) if cart_cols else w[:, None]
        if np.linalg.matrix_rank(cand, tol=1e-8) == len(cart_cols) + 1:
            cart_cols.append(w)
        if len(cart_cols) == r // 2:
            break
    cols = cart_cols + [
        eye[:, i] + 1j * signs[p] * eye[:, j]
        for p, (i, j) in enumerate(roots.root_space_pairs)
    ]
    S = np.stack(cols, axis=1)
    if np.linalg.matrix_rank(np.concatenate([S, S.conj()], axis=1), tol=1e-8) != spec.dim:
        raise NotAlmostComplex("eigenspace intersects its conjugate")

    Sp = np.linalg.pinv(S)
    residual = 0.0
    n = S.shape[1]
    for a in range(n):
        for b in range(a + 1, n):
            w = spec.bracket(S[:, a], S[:, b])
            rnorm = float(np.linalg.norm(w - S @ (Sp @ w)))
            residual = max(residual, rnorm / max(1.0, float(np.linalg.norm(w))))
    if validate and residual > tolerance:
        raise NotSubalgebra(
            f"-i eigenspace is not closed under the bracket: residual {residual:.3e}"
        )
    return SamelsonStructure(
        algebra=spec,
        roots=roots,
        J=J,
        cartan_block=J0,
        root_signs=signs,
        closure_residual=residual,
    )


def nijenhuis_at_identity(spec: LieAlgebraSpec, J) -> np.ndarray:
    """Nijenhuis tensor N[k, i, j] of an invariant structure, via the bracket.

    Uses N(u, v) = [u, v] - [Ju, Jv] + J [u, Jv] + J [Ju, v] on basis pairs.
    ``J`` may be a matrix or a :class:`SamelsonStructure`.
    """
    if isinstance(J, SamelsonStructure):
        J = J.J
    J = np.asarray(J, dtype=float)
    if J.shape != (spec.dim, spec.dim):
        raise NotAlmostComplex(f"J must be {spec.dim}x{spec.dim}")
    if np.linalg.norm(J @ J + np.eye(spec.dim)) > 1e-10:
        raise NotAlmostComplex("J does not square to -identity")
    c = spec.structure_constants
    N = (
        c
        - np.einsum("ai,bj,kab->kij", J, J, c)
        + np.einsum("km,mib,bj->kij", J, c, J)
        + np.einsum("km,maj,ai->kij", J, c, J)
    )
    return N


def blockdiagonal_check(
    embedding: SubalgebraEmbedding,
    J,
    tolerance: float = 1e-12,
    *,
    validate: bool = False,
) -> BlockReport:
    """Measure how an endomorphism splits across a subalgebra decomposition."""
    if isinstance(J, SamelsonStructure):
        J = J.J
    J = np.asarray(J, dtype=float)
    Bs = embedding.sub_basis
    Bc = embedding.complement_basis
    off_sc = float(np.linalg.norm(Bc.T @ J @ Bs))
    off_cs = float(np.linalg.norm(Bs.T @ J @ Bc))
    sub_block = Bs.T @ J @ Bs
    comp_block = Bc.T @ J @ Bc
    report = BlockReport(
        off_block_sub_to_complement=off_sc,
        off_block_complement_to_sub=off_cs,
        sub_block=sub_block,
        complement_block=comp_block,
        sub_squared_residual=float(
            np.linalg.norm(sub_block @ sub_block + np.eye(sub_block.shape[0]))
        ),
        complement_squared_residual=float(
            np.linalg.norm(comp_block @ comp_block + np.eye(comp_block.shape[0]))
        ),
    )
    if validate and max(off_sc, off_cs) > tolerance:
        raise NotBlockDiagonal(
            f"off-diagonal blocks have norm {max(off_sc, off_cs):.3e} > {tolerance:g}"
        )
    return report


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------


def algebra_to_json(spec: LieAlgebraSpec) -> str:
    """Serialize an algebra spec to a JSON string (flat row-major tensors)."""
    payload = {
        "name": spec.name,
        "dim": spec.dim,
        "basis_labels": list(spec.basis_labels),
        "structure_constants": spec.structure_constants.ravel().tolist(),
        "killing_form": spec.killing_form.ravel().tolist(),
    }
    return json.dumps(payload)


def algebra_from_json(text: str) -> LieAlgebraSpec:
    """Inverse of :func:`algebra_to_json`, with shape and Jacobi validation."""
    from .errors import ConfigError

    try:
        payload = json.loads(text)
        name = str(payload["name"])
        dim = int(payload["dim"])
        labels = tuple(str(s) for s in payload["basis_labels"])
        c = np.array(payload["structure_constants"], dtype=float).reshape(dim, dim, dim)
        k = np.array(payload["killing_form"], dtype=float).reshape(dim, dim)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed algebra JSON: {exc}") from exc
    if len(labels) != dim:
        raise ConfigError("basis_labels length does not match dim")
    if np.abs(c + np.swapaxes(c, 1, 2)).max() > 1e-10:
        raise DegenerateResult("structure constants are not antisymmetric")
    _check_jacobi(c)
    return LieAlgebraSpec(
        name=name, dim=dim, basis_labels=labels, structure_constants=c, killing_form=k
    )
