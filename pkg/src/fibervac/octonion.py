"""Octonion arithmetic on 8-vectors.

Basis order is (1, e1, ..., e7) with the multiplication table generated by the
cyclic triples (123), (145), (176), (246), (257), (347), (365): each triple
(a, b, c) means e_a e_b = e_c together with its cyclic images and
anticommutativity.  All imaginary units square to -1.
"""

from __future__ import annotations

import numpy as np

TRIPLES = ((1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 6, 5))

_TABLE_CACHE: dict[str, np.ndarray] = {}


def multiplication_tensor() -> np.ndarray:
    """Tensor T with (x y)_k = sum_{ij} T[k, i, j] x_i y_j."""
    if "T" in _TABLE_CACHE:
        return _TABLE_CACHE["T"]
    T = np.zeros((8, 8, 8))
    for i in range(8):
        T[i, 0, i] = 1.0
    for i in range(1, 8):
        T[i, i, 0] = 1.0
        T[0, i, i] = -1.0
    for triple in TRIPLES:
        for a, b, c in (triple, triple[1:] + triple[:1], triple[2:] + triple[:2]):
            T[c, a, b] = 1.0
            T[c, b, a] = -1.0
    _TABLE_CACHE["T"] = T
    return T


def octonion_multiply(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Product of octonions given as arrays of shape (..., 8)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != 8 or y.shape[-1] != 8:
        raise ValueError("octonions must be 8-vectors")
    return np.einsum("kij,...i,...j->...k", multiplication_tensor(), x, y)


def conjugate(x: np.ndarray) -> np.ndarray:
    """Octonion conjugate: flips the sign of the imaginary part."""
    out = -np.asarray(x, dtype=float).copy()
    out[..., 0] *= -1.0
    return out


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return octonion_multiply(x, y) - octonion_multiply(y, x)


def associator(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """(xy)z - x(yz); vanishes iff x, y, z associate."""
    return octonion_multiply(octonion_multiply(x, y), z) - octonion_multiply(
        x, octonion_multiply(y, z)
    )


def standard_derivations() -> list[np.ndarray]:
    """The 21 derivations D_{e_i, e_j}(z) = [[e_i, e_j], z] - 3 [e_i, e_j, z].

    Each is returned as a real 7x7 matrix acting on the imaginary units
    (e1, ..., e7).  Their span is the 14-dimensional derivation algebra.
    """
    eye = np.eye(8)
    out = []
    for i in range(1, 8):
        for j in range(i + 1, 8):
            D = np.zeros((7, 7))
            for k in range(1, 8):
                val = commutator(commutator(eye[i], eye[j]), eye[k])
                val = val - 3.0 * associator(eye[i], eye[j], eye[k])
                if abs(val[0]) > 1e-12:
                    raise AssertionError("derivation does not preserve Im(O)")
                D[:, k - 1] = val[1:]
            out.append(D)
    return out
