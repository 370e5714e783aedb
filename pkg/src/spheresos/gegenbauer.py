"""Gegenbauer (ultraspherical) polynomials in the reproducing-kernel normalization.

For ambient dimension d >= 2 the family C_k is orthogonal on [-1, 1] for the
weight (1 - t^2)^((d-3)/2) and scaled so that C_k(1) equals the dimension of
the space of degree-k spherical harmonics on S^{d-1}.  With that scaling the
zonal kernel C_k(<x, y>) reproduces degree-k harmonics, and the normalized
functions C_k / sqrt(C_k(1)) are orthonormal for the probability measure

    dmu(t) = (omega_{d-1} / omega_d) (1 - t^2)^((d-3)/2) dt.

The basis carries the three-term recurrence, endpoint values, and Gauss
quadrature rules for dmu.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigh_tridiagonal


def weight_ratio(d: int) -> float:
    """Ratio omega_{d-1}/omega_d of sphere surface areas, via log-gamma."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return math.exp(math.lgamma(d / 2.0) - math.lgamma((d - 1) / 2.0)) / math.sqrt(math.pi)


def harmonic_dim(d: int, k: int) -> int:
    """Dimension of the space of degree-k spherical harmonics on S^{d-1}."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if k < 2:
        return 1 if k == 0 else d
    return math.comb(d + k - 1, k) - math.comb(d + k - 3, k - 2)


def _recurrence_beta(d: int, k: int) -> float:
    # Monic three-term recurrence coefficient beta_k for the weight
    # (1-t^2)^((d-3)/2); k = 1 is special-cased because the general
    # expression is 0/0 at d = 2.
    if k == 1:
        return 1.0 / d
    return k * (k + d - 3.0) / ((2.0 * k + d - 4.0) * (2.0 * k + d - 2.0))


def _offdiagonal(d: int, count: int) -> np.ndarray:
    return np.sqrt([_recurrence_beta(d, k) for k in range(1, count + 1)])


class GegenbauerBasis:
    """Immutable bundle of recurrence and endpoint data for fixed dimension d.

    ``recurrence`` holds rows (a_k, b_k, c_k) of
    C_{k+1}(t) = (a_k t + b_k) C_k(t) - c_k C_{k-1}(t); b_k = 0 throughout
    since the weight is even.
    """

    def __init__(self, d: int, max_degree: int):
        if d < 2:
            raise ValueError(
                f"dimension must be >= 2 (weight exponent (d-3)/2 is non-integrable at d=1), got {d}"
            )
        if max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        self.d = d
        self.max_degree = max_degree
        self.endpoint_values = np.array(
            [float(harmonic_dim(d, k)) for k in range(max_degree + 1)]
        )
        self.weight_ratio = weight_ratio(d)
        self._offdiag = _offdiagonal(d, max_degree + 1)
        s = np.sqrt(self.endpoint_values)
        rec = np.zeros((max_degree, 3))
        for k in range(max_degree):
            sk1 = math.sqrt(float(harmonic_dim(d, k + 1)))
            rec[k, 0] = sk1 / (s[k] * self._offdiag[k])
            if k >= 1:
                rec[k, 2] = sk1 * self._offdiag[k - 1] / (s[k - 1] * self._offdiag[k])
        self.recurrence = rec

    def __repr__(self):
        return f"GegenbauerBasis(d={self.d}, max_degree={self.max_degree})"

    def orthonormal_values(self, t, kmax: int | None = None) -> np.ndarray:
        """Values of the orthonormal family C_k/sqrt(C_k(1)), k = 0..kmax.

        Returns an array of shape (kmax+1,) + shape(t), computed by forward
        recurrence (stable for k <= ~200 on [-1, 1]).
        """
        if kmax is None:
            kmax = self.max_degree
        t = np.asarray(t, dtype=float)
        out = np.empty((kmax + 1,) + t.shape)
        out[0] = 1.0
        if kmax >= 1:
            out[1] = t / self._offdiag[0]
        for k in range(1, kmax):
            out[k + 1] = (t * out[k] - self._offdiag[k - 1] * out[k - 1]) / self._offdiag[k]
        return out

    def eval_ck(self, k: int, t):
        """Value of C_k(t) by forward recurrence; t may be scalar or array."""
        if not 0 <= k <= self.max_degree:
            raise ValueError(f"degree {k} outside basis range 0..{self.max_degree}")
        vals = self.orthonormal_values(t, k)[k]
        result = vals * math.sqrt(self.endpoint_values[k])
        return float(result) if np.ndim(t) == 0 else result

    def derivative_at_one(self, k: int) -> float:
        """C_k'(1), using C_k'(1)/C_k(1) = k(k+d-2)/(d-1)."""
        if not 0 <= k <= self.max_degree:
            raise ValueError(f"degree {k} outside basis range 0..{self.max_degree}")
        return self.endpoint_values[k] * k * (k + self.d - 2) / (self.d - 1)

    def gauss_rule(self, node_count: int) -> tuple[np.ndarray, np.ndarray]:
        """Gauss nodes and weights for dmu, exact to degree 2*node_count - 1.

        Golub-Welsch on the Jacobi matrix of the recurrence; since dmu is a
        probability measure the weights sum to 1.
        """
        if node_count < 1:
            raise ValueError("node_count must be >= 1")
        if node_count == 1:
            return np.zeros(1), np.ones(1)
        offd = _offdiagonal(self.d, node_count - 1)
        try:
            nodes, vecs = eigh_tridiagonal(np.zeros(node_count), offd)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise RuntimeError(f"quadrature eigensolver failed: {exc}") from exc
        weights = vecs[0, :] ** 2
        return nodes, weights

    def gegenbauer_combination_values(self, coeffs, t) -> np.ndarray:
        """Evaluate sum_k coeffs[k] * C_k(t)/C_k(1) at the given t values."""
        coeffs = np.asarray(coeffs, dtype=float)
        kmax = len(coeffs) - 1
        if kmax > self.max_degree:
            raise ValueError("combination degree exceeds basis max_degree")
        vals = self.orthonormal_values(t, kmax)
        scale = coeffs / np.sqrt(self.endpoint_values[: kmax + 1])
        return np.tensordot(scale, vals, axes=(0, 0))


def basis_new(d: int, max_degree: int) -> GegenbauerBasis:
    """Construct the degree-capped Gegenbauer family for dimension d."""
    return GegenbauerBasis(d, max_degree)
