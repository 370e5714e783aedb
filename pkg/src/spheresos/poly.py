"""Sparse homogeneous polynomial arithmetic, scalar and symmetric-matrix-valued.

Polynomials are stored as a map from exponent multi-indices to coefficients.
All inputs and results are homogeneous; the total degree is carried as
metadata so the zero polynomial keeps its degree.  Evaluation is vectorized
over batches of points, which is what the sphere-optimization and sampling
routines lean on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Row chunk for batched monomial evaluation, sized to keep the (points x terms)
# work matrix a few tens of MB at most.
_EVAL_CHUNK_ENTRIES = 4_000_000


def _graded_lex_key(exps: tuple[int, ...]):
    return tuple(-e for e in exps)


@dataclass
class SpherePoint:
    """A point of S^{d-1}; the norm is validated at construction."""

    d: int
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        if self.coords.shape != (self.d,):
            raise ValueError(f"expected {self.d} coordinates, got shape {self.coords.shape}")
        nrm = float(np.linalg.norm(self.coords))
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"not a unit vector: |norm - 1| = {abs(nrm - 1.0):.3e}")


class Poly:
    """Sparse homogeneous polynomial in d real variables.

    terms maps exponent tuples (length d, entries summing to ``degree``) to
    float coefficients; exact zeros are not stored.
    """

    __slots__ = ("d", "degree", "terms", "_arrays", "_grad_polys")

    def __init__(self, d: int, degree: int, terms: dict[tuple[int, ...], float]):
        if d < 1:
            raise ValueError("variable count must be >= 1")
        if degree < 0:
            raise ValueError("degree must be >= 0")
        clean = {}
        for exps, coef in terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != d:
                raise ValueError(f"multi-index {exps} has length {len(exps)}, expected {d}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            if sum(exps) != degree:
                raise ValueError(f"multi-index {exps} sums to {sum(exps)}, expected {degree}")
            coef = float(coef)
            if coef != 0.0:
                clean[exps] = clean.get(exps, 0.0) + coef
        self.d = d
        self.degree = degree
        self.terms = {e: c for e, c in clean.items() if c != 0.0}
        self._arrays = None
        self._grad_polys = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, d: int, degree: int) -> "Poly":
        return cls(d, degree, {})

    @classmethod
    def constant(cls, d: int, value: float) -> "Poly":
        return cls(d, 0, {(0,) * d: value})

    @classmethod
    def monomial(cls, d: int, exps, coef: float = 1.0) -> "Poly":
        exps = tuple(int(e) for e in exps)
        return cls(d, sum(exps), {exps: coef})

    @classmethod
    def norm_squared(cls, d: int) -> "Poly":
        terms = {}
        for i in range(d):
            e = [0] * d
            e[i] = 2
            terms[tuple(e)] = 1.0
        return cls(d, 2, terms)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        if not self.terms:
            return other
        if not other.terms:
            return self
        if self.degree != other.degree:
            raise ValueError("cannot add homogeneous polynomials of different degree")
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return Poly(self.d, self.degree, terms)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, Poly):
            if self.d != other.d:
                raise ValueError("dimension mismatch")
            terms: dict[tuple[int, ...], float] = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    terms[e] = terms.get(e, 0.0) + c1 * c2
            return Poly(self.d, self.degree + other.degree, terms)
        return Poly(self.d, self.degree, {e: c * float(other) for e, c in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "Poly":
        return self * -1.0

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and self.d == other.d
            and self.degree == other.degree
            and self.terms == other.terms
        )

    def __repr__(self):
        return f"Poly(d={self.d}, degree={self.degree}, nterms={len(self.terms)})"

    def sorted_terms(self):
        """Terms in graded-lex order (canonical for serialization)."""
        return sorted(self.terms.items(), key=lambda item: _graded_lex_key(item[0]))

    def max_abs_coef(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    # -- calculus -----------------------------------------------------------

    def partial(self, i: int) -> "Poly":
        """Partial derivative with respect to variable i."""
        terms = {}
        for e, c in self.terms.items():
            if e[i] > 0:
                ne = list(e)
                ne[i] -= 1
                terms[tuple(ne)] = terms.get(tuple(ne), 0.0) + c * e[i]
        return Poly(self.d, max(self.degree - 1, 0), terms)

    def laplacian(self) -> "Poly":
        """Sum of second partials; degree drops by 2 (zero for degree < 2)."""
        if self.degree < 2:
            return Poly.zero(self.d, 0)
        terms: dict[tuple[int, ...], float] = {}
        for e, c in self.terms.items():
            for i in range(self.d):
                if e[i] >= 2:
                    ne = list(e)
                    ne[i] -= 2
                    key = tuple(ne)
                    terms[key] = terms.get(key, 0.0) + c * e[i] * (e[i] - 1)
        return Poly(self.d, self.degree - 2, terms)

    def mul_norm_power(self, j: int) -> "Poly":
        """Multiply by |x|^(2j), expanded; degree grows by 2j."""
        if j < 0:
            raise ValueError("power must be >= 0")
        out = self
        nsq = Poly.norm_squared(self.d)
        for _ in range(j):
            out = out * nsq
        return out

    # -- evaluation ---------------------------------------------------------

    def _ensure_arrays(self):
        if self._arrays is None:
            if self.terms:
                items = self.sorted_terms()
                E = np.array([e for e, _ in items], dtype=np.int64)
                c = np.array([c for _, c in items])
            else:
                E = np.zeros((0, self.d), dtype=np.int64)
                c = np.zeros(0)
            self._arrays = (E, c)
        return self._arrays

    def eval(self, x) -> float:
        """Exact polynomial evaluation at a single point."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.d},)")
        return float(self.eval_many(x[None, :])[0])

    __call__ = eval

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        """Evaluate at an (N, d) batch of points; returns shape (N,)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise ValueError(f"points have shape {X.shape}, expected (N, {self.d})")
        E, c = self._ensure_arrays()
        n = X.shape[0]
        if len(c) == 0:
            return np.zeros(n)
        # Per-variable power tables plus gathers: O(N * max_exp) pow calls
        # instead of O(N * terms) of them.
        max_e = E.max(axis=0)
        out = np.empty(n)
        chunk = max(1, _EVAL_CHUNK_ENTRIES // len(c))
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            acc = np.ones((hi - lo, len(c)))
            for i in range(self.d):
                if max_e[i] == 0:
                    continue
                table = X[lo:hi, i : i + 1] ** np.arange(max_e[i] + 1)[None, :]
                acc *= table[:, E[:, i]]
            out[lo:hi] = acc @ c
        return out

    def gradient_many(self, X: np.ndarray) -> np.ndarray:
        """Gradients at an (N, d) batch of points; returns shape (N, d)."""
        if self._grad_polys is None:
            self._grad_polys = [self.partial(i) for i in range(self.d)]
        X = np.asarray(X, dtype=float)
        out = np.empty_like(X)
        for i, g in enumerate(self._grad_polys):
            out[:, i] = g.eval_many(X)
        return out

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "degree": self.degree,
            "terms": [
                {"exp": list(e), "coef": c} for e, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Poly":
        try:
            d = int(data["d"])
            degree = int(data["degree"])
            terms = {tuple(t["exp"]): float(t["coef"]) for t in data["terms"]}
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed polynomial JSON: {exc}") from exc
        return cls(d, degree, terms)


class MatPoly:
    """Symmetric k x k matrix with homogeneous polynomial entries.

    Only the upper triangle is stored; entry (i, j) with i <= j represents
    both (i, j) and (j, i).  All entries share d and degree.
    """

    __slots__ = ("d", "k", "degree", "entries")

    def __init__(self, d: int, k: int, degree: int, entries: dict[tuple[int, int], Poly]):
        if k < 1:
            raise ValueError("matrix size must be >= 1")
        clean = {}
        for (i, j), p in entries.items():
            if not 0 <= i <= j < k:
                raise ValueError(f"bad entry index ({i}, {j}) for size {k}")
            if p.d != d:
                raise ValueError("entry dimension mismatch")
            if p.terms and p.degree != degree:
                raise ValueError("entry degree mismatch")
            if p.terms:
                clean[(i, j)] = p
        self.d = d
        self.k = k
        self.degree = degree
        self.entries = clean

    @classmethod
    def zero(cls, d: int, k: int, degree: int) -> "MatPoly":
        return cls(d, k, degree, {})

    @classmethod
    def identity(cls, d: int, k: int, degree: int, scale: float = 1.0) -> "MatPoly":
        """scale * |x|^degree * I as a homogeneous MatPoly (degree even)."""
        if degree % 2 != 0:
            raise ValueError("identity embedding needs even degree")
        base = Poly.constant(d, scale).mul_norm_power(degree // 2)
        return cls(d, k, degree, {(i, i): base for i in range(k)})

    @classmethod
    def diagonal(cls, polys: list[Poly]) -> "MatPoly":
        d = polys[0].d
        degree = polys[0].degree
        return cls(d, len(polys), degree, {(i, i): p for i, p in enumerate(polys)})

    def entry(self, i: int, j: int) -> Poly:
        if i > j:
            i, j = j, i
        return self.entries.get((i, j), Poly.zero(self.d, self.degree))

    def __add__(self, other: "MatPoly") -> "MatPoly":
        if (self.d, self.k) != (other.d, other.k):
            raise ValueError("shape mismatch")
        keys = set(self.entries) | set(other.entries)
        degree = self.degree if self.entries or not other.entries else other.degree
        return MatPoly(
            self.d, self.k, degree,
            {key: self.entry(*key) + other.entry(*key) for key in keys},
        )

    def __sub__(self, other: "MatPoly") -> "MatPoly":
        return self + (other * -1.0)

    def __mul__(self, scalar) -> "MatPoly":
        return MatPoly(
            self.d, self.k, self.degree,
            {key: p * float(scalar) for key, p in self.entries.items()},
        )

    __rmul__ = __mul__

    def __repr__(self):
        return f"MatPoly(d={self.d}, k={self.k}, degree={self.degree}, nentries={len(self.entries)})"

    def laplacian(self) -> "MatPoly":
        return MatPoly(
            self.d, self.k, max(self.degree - 2, 0),
            {key: p.laplacian() for key, p in self.entries.items()},
        )

    def mul_norm_power(self, j: int) -> "MatPoly":
        return MatPoly(
            self.d, self.k, self.degree + 2 * j,
            {key: p.mul_norm_power(j) for key, p in self.entries.items()},
        )

    def max_abs_coef(self) -> float:
        return max((p.max_abs_coef() for p in self.entries.values()), default=0.0)

    def eval(self, x) -> np.ndarray:
        """Symmetric k x k value at a single point."""
        return self.eval_many(np.asarray(x, dtype=float)[None, :])[0]

    __call__ = eval

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        """Values at an (N, d) batch; returns shape (N, k, k), symmetric."""
        X = np.asarray(X, dtype=float)
        out = np.zeros((X.shape[0], self.k, self.k))
        for (i, j), p in self.entries.items():
            v = p.eval_many(X)
            out[:, i, j] = v
            if i != j:
                out[:, j, i] = v
        return out

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "degree": self.degree,
            "entries": [
                {"i": i, "j": j, "terms": self.entries[(i, j)].to_dict()["terms"]}
                for (i, j) in sorted(self.entries)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MatPoly":
        try:
            d = int(data["d"])
            k = int(data["k"])
            degree = int(data["degree"])
            entries = {}
            for ent in data["entries"]:
                p = Poly.from_dict({"d": d, "degree": degree, "terms": ent["terms"]})
                entries[(int(ent["i"]), int(ent["j"]))] = p
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed matrix polynomial JSON: {exc}") from exc
        return cls(d, k, degree, entries)


# ---------------------------------------------------------------------------
# Sphere sampling and sup-norm estimation
# ---------------------------------------------------------------------------

def sample_sphere_array(d: int, count: int, seed: int) -> np.ndarray:
    """Uniform points on S^{d-1} as an (count, d) array; deterministic in seed."""
    if d < 1 or count < 1:
        raise ValueError("d and count must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((count, d))
    norms = np.linalg.norm(X, axis=1)
    bad = norms < 1e-100
    if bad.any():  # pragma: no cover - probability zero in practice
        X[bad] = 0.0
        X[bad, 0] = 1.0
        norms[bad] = 1.0
    return X / norms[:, None]


def sample_sphere(d: int, count: int, seed: int) -> list[SpherePoint]:
    """Uniform SpherePoint samples via normalized Gaussian vectors."""
    return [SpherePoint(d, row) for row in sample_sphere_array(d, count, seed)]


@dataclass
class SupNormEstimate:
    """Multistart estimate of the range of a polynomial on the sphere.

    max_est / min_est are inner bounds (max_est <= true max, min_est >= true
    min); converged is False if some restart hit the iteration cap with a
    non-negligible Riemannian gradient.
    """

    max_est: float
    min_est: float
    argmax: SpherePoint
    argmin: SpherePoint
    converged: bool
    restarts: int


def _project_rows(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=1)[:, None]


def _ascend(value_grad, X0: np.ndarray, iters: int, grad_tol: float):
    """Batched Riemannian gradient ascent on the sphere with backtracking.

    value_grad maps an (R, d) batch to (values (R,), euclidean grads (R, d)).
    Each row is an independent restart; moves are accepted only on strict
    improvement, so per-restart trajectories are monotone.
    """
    X = X0.copy()
    v, G = value_grad(X)
    step = np.full(X.shape[0], 0.25)
    converged = np.zeros(X.shape[0], dtype=bool)
    for _ in range(iters):
        Gr = G - (np.sum(G * X, axis=1))[:, None] * X
        gn2 = np.sum(Gr * Gr, axis=1)
        converged |= gn2 <= grad_tol**2
        active = ~converged & (step > 1e-14)
        if not active.any():
            break
        Xt = _project_rows(X + step[:, None] * Gr)
        vt, Gt = value_grad(Xt)
        improved = active & (vt > v)
        X[improved] = Xt[improved]
        v[improved] = vt[improved]
        G[improved] = Gt[improved]
        step[improved] *= 1.3
        step[active & ~improved] *= 0.5
    return v, X, bool(np.all(converged | (step <= 1e-14)))


def _matrix_value_grad(F: MatPoly, which: str):
    partials = {
        key: [p.partial(i) for i in range(F.d)] for key, p in F.entries.items()
    }

    def value_grad(X: np.ndarray):
        vals = F.eval_many(X)
        w, V = np.linalg.eigh(vals)
        idx = -1 if which == "max" else 0
        lam = w[:, idx]
        vec = V[:, :, idx]
        G = np.zeros_like(X)
        for (i, j), plist in partials.items():
            factor = vec[:, i] * vec[:, j]
            if i != j:
                factor = 2.0 * factor
            for a, pa in enumerate(plist):
                if pa.terms:
                    G[:, a] += factor * pa.eval_many(X)
        return lam, G

    return value_grad


def sup_norm_sphere(
    target: Poly | MatPoly,
    restarts: int = 64,
    seed: int = 0,
    iters: int = 200,
    grad_tol: float = 1e-8,
) -> SupNormEstimate:
    """Estimate max / min of a polynomial (or of the eigenvalue range of a
    matrix polynomial) over the unit sphere by multistart projected gradient
    ascent.  Deterministic in (restarts, seed), and the start points for
    ``restarts = r`` are a prefix of those for ``restarts = r + 1``, so
    max_est is non-decreasing in restarts.  Estimates are not certified."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    X0 = sample_sphere_array(target.d, restarts, seed)

    if isinstance(target, MatPoly):
        vg_max = _matrix_value_grad(target, "max")
        vg_min = _matrix_value_grad(target, "min")

        def neg_min(X):
            v, G = vg_min(X)
            return -v, -G

        vmax, Xmax, conv1 = _ascend(vg_max, X0, iters, grad_tol)
        vmin, Xmin, conv2 = _ascend(neg_min, X0, iters, grad_tol)
        vmin = -vmin
    else:
        def vg(X):
            return target.eval_many(X), target.gradient_many(X)

        def neg_vg(X):
            v, G = vg(X)
            return -v, -G

        vmax, Xmax, conv1 = _ascend(vg, X0, iters, grad_tol)
        vmin, Xmin, conv2 = _ascend(neg_vg, X0, iters, grad_tol)
        vmin = -vmin

    imax = int(np.argmax(vmax))
    imin = int(np.argmin(vmin))
    return SupNormEstimate(
        max_est=float(vmax[imax]),
        min_est=float(vmin[imin]),
        argmax=SpherePoint(target.d, _project_rows(Xmax[imax][None, :])[0]),
        argmin=SpherePoint(target.d, _project_rows(Xmin[imin][None, :])[0]),
        converged=conv1 and conv2,
        restarts=restarts,
    )
