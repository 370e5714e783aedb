"""Generalized Toeplitz matrices over the Gegenbauer family.

T[h] is the (ell+1) x (ell+1) symmetric matrix of weighted integrals of
p_i(t) p_j(t) h(t) against the normalized ultraspherical measure, where
p_i = C_i / sqrt(C_i(1)) is the orthonormal family.  Entries vanish for
|i - j| > deg(h) by orthogonality, and T[t] is the tridiagonal Jacobi matrix
whose eigenvalues are the roots of C_{ell+1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .gegenbauer import GegenbauerBasis, _offdiagonal


@dataclass
class ToeplitzOp:
    """Dense symmetric storage of T[h] with its multiplier descriptor."""

    d: int
    size: int
    h_descriptor: tuple
    bandwidth: int
    matrix: np.ndarray = field(repr=False)


def _trim(coeffs) -> np.ndarray:
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    nz = np.nonzero(coeffs)[0]
    return coeffs[: nz[-1] + 1] if nz.size else coeffs[:1]


def build(basis: GegenbauerBasis, ell: int, h, kind: str = "monomial") -> ToeplitzOp:
    """Assemble T[h] for the multiplier h on the degree-(ell) window.

    h is a coefficient array: of powers of t when kind == "monomial", or of
    C_k/C_k(1) when kind == "gegenbauer".  The quadrature is exact for the
    integrand degree i + j + deg(h).
    """
    if kind not in ("monomial", "gegenbauer"):
        raise ValueError(f"unknown multiplier kind {kind!r}")
    if ell < 0:
        raise ValueError("ell must be >= 0")
    h = _trim(h)
    deg_h = len(h) - 1
    if ell + deg_h > basis.max_degree:
        raise ValueError(
            f"ell + deg(h) = {ell + deg_h} exceeds basis max_degree {basis.max_degree}"
        )
    node_count = math.ceil((2 * ell + deg_h + 1) / 2) + 2
    nodes, weights = basis.gauss_rule(node_count)
    if kind == "monomial":
        hv = np.polynomial.polynomial.polyval(nodes, h)
    else:
        hv = basis.gegenbauer_combination_values(h, nodes)
    P = basis.orthonormal_values(nodes, ell)
    M = (P * (weights * hv)) @ P.T
    upper = np.triu(M)
    M = upper + np.triu(M, 1).T
    return ToeplitzOp(
        d=basis.d, size=ell + 1, h_descriptor=(kind, tuple(h)), bandwidth=deg_h, matrix=M
    )


def build_single_gegenbauer(basis: GegenbauerBasis, ell: int, k: int) -> ToeplitzOp:
    """T[C_k / C_k(1)], the multiplier that isolates one harmonic order."""
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    return build(basis, ell, coeffs, kind="gegenbauer")


def lambda_max(op: ToeplitzOp) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and unit eigenvector of the symmetric matrix.

    The eigenvector sign is fixed by making its largest-magnitude entry
    positive; the residual |T v - lam v| is checked against 1e-10 |T|.
    """
    w, V = np.linalg.eigh(op.matrix)
    lam = float(w[-1])
    vec = V[:, -1]
    pivot = int(np.argmax(np.abs(vec)))
    if vec[pivot] < 0:
        vec = -vec
    norm_t = float(np.linalg.norm(op.matrix, 2))
    resid = float(np.linalg.norm(op.matrix @ vec - lam * vec))
    if resid > 1e-10 * max(norm_t, 1.0):  # pragma: no cover
        raise RuntimeError(f"eigensolver residual {resid:.3e} too large")
    return lam, vec


def gegenbauer_roots(basis: GegenbauerBasis, m: int) -> np.ndarray:
    """All m roots of C_m, ascending, as eigenvalues of the m x m Jacobi matrix."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m == 1:
        return np.zeros(1)
    offd = _offdiagonal(basis.d, m - 1)
    return eigh_tridiagonal(np.zeros(m), offd, eigvals_only=True)
