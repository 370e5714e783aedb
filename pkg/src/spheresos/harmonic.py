"""Spherical-harmonic (Fourier-Laplace) decomposition of homogeneous polynomials.

A homogeneous polynomial f of even degree 2n decomposes uniquely as
f = sum_k |x|^(2(n-k)) f_{2k} with each f_{2k} harmonic of degree 2k.  The
decomposition is recovered from iterated Laplacians: applying Delta^m to the
expansion multiplies the f_{2k} term by a known positive coefficient and
drops the |x| power, which yields a triangular system solved by
back-substitution.  The same machinery applies entry-wise to matrix
polynomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .poly import MatPoly, Poly


def _falling(a: float, m: int) -> float:
    out = 1.0
    for i in range(m):
        out *= a - i
    return out


def r_coefficient(n: int, d: int, m: int, k: int) -> float:
    """Coefficient of |x|^(2(n-k-m)) f_{2k} in Delta^m of |x|^(2(n-k)) f_{2k}.

    Equals 4^m (n-k)_m (n+k+d/2-1)_m with falling factorials (half-integer
    arguments allowed); zero when the Laplacian power annihilates the term
    (k > n - m)."""
    if m < 0 or k < 0 or n < 0:
        raise ValueError("arguments must be nonnegative")
    if k > n - m:
        return 0.0
    return 4.0**m * _falling(n - k, m) * _falling(n + k + d / 2.0 - 1.0, m)


def b_constant(n: int) -> float:
    """Upper bound on the sup-norm projection constant B_{2n}.

    2 for n = 1; 10 for n = 2 (the appendix chain with the quartic Laplacian
    coefficient 2d+8, which the round-trip recursion validates); the general
    (2n)! (1 + (2n)!)^n otherwise."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return 2.0
    if n == 2:
        return 10.0
    f = float(math.factorial(2 * n))
    return f * (1.0 + f) ** n


@dataclass
class HarmonicDecomp:
    """Harmonic parts f_{2k}, k = 0..n, of a degree-2n polynomial.

    residual is the max-coefficient error of reconstructing the input from
    the parts, relative to the input's largest coefficient."""

    n: int
    parts: list = field(repr=False)
    matrix: bool = False
    residual: float = 0.0

    def reconstruct(self):
        """Sum of |x|^(2(n-k)) f_{2k}; equals the decomposed input."""
        out = None
        for k, part in enumerate(self.parts):
            lifted = part.mul_norm_power(self.n - k)
            out = lifted if out is None else out + lifted
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "matrix": self.matrix,
            "parts": [p.to_dict() for p in self.parts],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HarmonicDecomp":
        matrix = bool(data.get("matrix", False))
        maker = MatPoly.from_dict if matrix else Poly.from_dict
        return cls(
            n=int(data["n"]),
            parts=[maker(p) for p in data["parts"]],
            matrix=matrix,
            residual=float(data.get("residual", 0.0)),
        )


def _decompose_scalar(f: Poly) -> list[Poly]:
    n = f.degree // 2
    d = f.d
    laps = [f]
    for _ in range(n):
        laps.append(laps[-1].laplacian())
    parts: list[Poly] = [None] * (n + 1)
    for m in range(n, -1, -1):
        j = n - m
        acc = laps[m]
        for k in range(j):
            acc = acc - r_coefficient(n, d, m, k) * parts[k].mul_norm_power(j - k)
        pivot = r_coefficient(n, d, m, j)
        parts[j] = acc * (1.0 / pivot)
    return parts


def decompose(f: Poly) -> HarmonicDecomp:
    """Fourier-Laplace decomposition of an even-degree homogeneous polynomial."""
    if f.degree % 2 != 0:
        raise ValueError(f"degree {f.degree} is odd; only even degrees decompose here")
    parts = _decompose_scalar(f)
    decomp = HarmonicDecomp(n=f.degree // 2, parts=parts, matrix=False)
    scale = max(f.max_abs_coef(), 1.0)
    decomp.residual = (decomp.reconstruct() - f).max_abs_coef() / scale
    return decomp


def decompose_matrix(F: MatPoly) -> HarmonicDecomp:
    """Entry-wise decomposition of a symmetric matrix polynomial."""
    if F.degree % 2 != 0:
        raise ValueError(f"degree {F.degree} is odd; only even degrees decompose here")
    n = F.degree // 2
    per_entry = {key: _decompose_scalar(p) for key, p in F.entries.items()}
    parts = []
    for k in range(n + 1):
        entries = {key: ps[k] for key, ps in per_entry.items() if ps[k].terms}
        parts.append(MatPoly(F.d, F.k, 2 * k, entries))
    decomp = HarmonicDecomp(n=n, parts=parts, matrix=True)
    scale = max(F.max_abs_coef(), 1.0)
    decomp.residual = (decomp.reconstruct() - F).max_abs_coef() / scale
    return decomp
