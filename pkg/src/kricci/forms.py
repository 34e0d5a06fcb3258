"""Pointwise algebra of symmetric bihermitian forms on a Hermitian vector space.

Conventions
-----------
A Hermitian form is stored as the matrix ``A[i, j] = A(e_i, conj(e_j))``, so
``A(X, conj(Y)) = sum_ij X[i] A[i, j] conj(Y[j])``: linear in the first slot,
conjugate-linear in the second.  A bihermitian form is stored as
``S[i, j, k, l] = S(e_i, conj(e_j), e_k, conj(e_l))`` with the analogous rule
per slot pair.  The two defining symmetries are

    S[i, j, k, l] = S[k, j, i, l]          (swap of the unbarred slots)
    conj(S[i, j, k, l]) = S[j, i, l, k]    (conjugation symmetry)

which together also force ``S[i, j, k, l] = S[i, l, k, j]``.  Holomorphic
sectional curvature is ``S(X, X̄, X, X̄) / |X|_h^4``; "negative curvature"
means that this quantity is negative.  The sign convention is fixed here once
and used by every other module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import RealityError

__all__ = [
    "HermitianForm",
    "BihermitianForm",
    "CurvatureParams",
    "SubspaceBasis",
    "SymmetryReport",
    "b_form",
    "hermitian_eval",
    "hsc",
    "norm_h",
    "quartic_values",
    "random_bihermitian",
    "random_hermitian",
    "require_real",
    "ric_plus",
    "ricci_trace",
    "scalar",
    "shift_sigma",
    "symmetrize",
    "unit_sphere_samples",
    "unitary_frame",
    "validate_symmetries",
]

REALITY_TOL = 1e-10


def require_real(value, scale=1.0, tol=REALITY_TOL, what="quantity"):
    """Assert that a symmetry-forced real scalar is numerically real.

    The imaginary part is compared against ``tol * (|scale| + |Re| + 1)`` and
    discarded on success; corruption raises instead of being silently dropped.
    """
    value = complex(value)
    if abs(value.imag) > tol * (abs(scale) + abs(value.real) + 1.0):
        raise RealityError(
            f"{what} must be real; got imaginary part {value.imag:.3e}"
        )
    return value.real


def _require_real_array(values, tol=REALITY_TOL, what="quantity"):
    """Vectorised version of :func:`require_real` for batched evaluations."""
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        return values.astype(float)
    scale = np.max(np.abs(values.real)) if values.size else 0.0
    worst = np.max(np.abs(values.imag)) if values.size else 0.0
    if worst > tol * (scale + 1.0):
        raise RealityError(f"{what} must be real; worst imaginary part {worst:.3e}")
    return values.real.copy()


@dataclass
class HermitianForm:
    """A Hermitian sesquilinear form given by its coefficient matrix."""

    entries: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.entries, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {A.shape}")
        scale = max(1.0, float(np.max(np.abs(A))) if A.size else 0.0)
        if np.max(np.abs(A - A.conj().T)) > 1e-12 * scale:
            raise ValueError("matrix is not Hermitian within 1e-12")
        self.entries = 0.5 * (A + A.conj().T)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "HermitianForm":
        return cls(np.eye(n, dtype=complex))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def is_positive_definite(self) -> bool:
        return bool(self.eigenvalues()[0] > 0.0)

    def require_positive(self, what="form") -> "HermitianForm":
        if not self.is_positive_definite():
            raise ValueError(f"{what} must be positive definite")
        return self

    def __call__(self, X, Y=None):
        return hermitian_eval(self.entries, X, Y)


@dataclass
class BihermitianForm:
    """A rank-4 coefficient tensor; symmetry is checked via ``validate_symmetries``.

    The container itself stays permissive so that corrupted tensors can be
    represented, inspected, and repaired by :func:`symmetrize`.
    """

    entries: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.entries, dtype=complex)
        if T.ndim != 4 or len(set(T.shape)) != 1:
            raise ValueError(f"expected shape (n, n, n, n), got {T.shape}")
        self.entries = T

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __call__(self, X, Y, Z, W):
        """Evaluate S(X, Ȳ, Z, W̄)."""
        return np.einsum(
            "ijkl,i,j,k,l->",
            self.entries,
            np.asarray(X, dtype=complex),
            np.conj(Y),
            np.asarray(Z, dtype=complex),
            np.conj(W),
        )


@dataclass
class CurvatureParams:
    """Coefficients (alpha, beta, lam, sigma, k) of the mixed curvature bounds.

    ``lam`` is the level in ``alpha*h(X,X̄)*rho(X,X̄) + beta*S(X,X̄,X,X̄) <=
    lam*|X|^4`` and ``sigma`` the k-Ricci normalisation in ``Ric_k <=
    -(k+1)*sigma``.
    """

    alpha: float = 1.0
    beta: float = 1.0
    lam: float = 0.0
    sigma: float = 0.0
    k: int = 1

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")


@dataclass
class SubspaceBasis:
    """An h-orthonormal frame spanning a k-dimensional subspace.

    ``columns[:, i]`` is the i-th frame vector; orthonormality with respect to
    ``metric`` is validated to 1e-12 at construction.
    """

    columns: np.ndarray
    metric: HermitianForm

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=complex)
        if cols.ndim != 2:
            raise ValueError("columns must be a 2-d array")
        n, k = cols.shape
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        if self.metric.n != n:
            raise ValueError("metric dimension does not match the frame")
        gram = np.einsum("pi,pq,qj->ij", cols, self.metric.entries, np.conj(cols))
        if np.max(np.abs(gram - np.eye(k))) > 1e-12 * max(1.0, np.max(np.abs(gram))):
            raise ValueError("columns are not h-orthonormal within 1e-12")
        self.columns = cols

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def k(self) -> int:
        return self.columns.shape[1]


@dataclass
class SymmetryReport:
    max_violation: float
    ok: bool


# The symmetry group of a bihermitian tensor has eight elements: the identity,
# the two slot swaps and their product, and the four conjugating maps.  Each is
# (transpose axes, conjugate?).  Averaging over the full group is a projection;
# averaging over a proper subset is not.
_SYMMETRY_OPS = (
    ((0, 1, 2, 3), False),
    ((2, 1, 0, 3), False),
    ((0, 3, 2, 1), False),
    ((2, 3, 0, 1), False),
    ((1, 0, 3, 2), True),
    ((3, 0, 1, 2), True),
    ((1, 2, 3, 0), True),
    ((3, 2, 1, 0), True),
)


def symmetrize(raw) -> BihermitianForm:
    """Project an arbitrary rank-4 tensor onto the bihermitian symmetry class."""
    T = raw.entries if isinstance(raw, BihermitianForm) else np.asarray(raw, dtype=complex)
    if T.ndim != 4 or len(set(T.shape)) != 1:
        raise ValueError(f"expected shape (n, n, n, n), got {T.shape}")
    acc = np.zeros_like(T)
    for axes, conjugate in _SYMMETRY_OPS:
        term = T.transpose(axes)
        acc += np.conj(term) if conjugate else term
    return BihermitianForm(acc / len(_SYMMETRY_OPS))


def validate_symmetries(S, tol: float = 1e-12) -> SymmetryReport:
    """Check both defining symmetries; reports the worst absolute violation."""
    T = S.entries if isinstance(S, BihermitianForm) else np.asarray(S, dtype=complex)
    v1 = float(np.max(np.abs(T - T.transpose(2, 1, 0, 3))))
    v2 = float(np.max(np.abs(np.conj(T) - T.transpose(1, 0, 3, 2))))
    worst = max(v1, v2)
    return SymmetryReport(max_violation=worst, ok=worst <= tol)


def b_form(h: HermitianForm) -> BihermitianForm:
    """The model form B with B(X,Ȳ,Z,W̄) = h(X,Ȳ)h(Z,W̄) + h(X,W̄)h(Z,Ȳ)."""
    H = h.entries
    B = np.einsum("ij,kl->ijkl", H, H) + np.einsum("il,kj->ijkl", H, H)
    return BihermitianForm(B)


def shift_sigma(S: BihermitianForm, h: HermitianForm, sigma: float) -> BihermitianForm:
    """Shift S by sigma times the model form of h.

    Shifts every k-Ricci value at a unit vector by (k+1)*sigma and the
    holomorphic sectional curvature by 2*sigma.
    """
    return BihermitianForm(S.entries + sigma * b_form(h).entries)


def hermitian_eval(A, X, Y=None):
    """Evaluate the Hermitian form A at (X, Ȳ); Y defaults to X."""
    X = np.asarray(X, dtype=complex)
    Y = X if Y is None else np.asarray(Y, dtype=complex)
    return np.einsum("i,ij,j->", X, np.asarray(A, dtype=complex), np.conj(Y))


def norm_h(X, h: HermitianForm) -> float:
    """The h-norm |X|_h."""
    val = require_real(hermitian_eval(h.entries, X), what="squared h-norm")
    if val < 0:
        raise ValueError("metric evaluated negatively; not positive definite")
    return float(np.sqrt(val))


def _cholesky(h: HermitianForm) -> np.ndarray:
    try:
        return np.linalg.cholesky(h.entries)
    except np.linalg.LinAlgError as exc:
        raise ValueError("metric must be positive definite") from exc


def unitary_frame(h: HermitianForm) -> np.ndarray:
    """Columns of an h-unitary frame (h(E_i, Ē_j) = δ_ij)."""
    L = _cholesky(h)
    return solve_triangular(L, np.eye(h.n, dtype=complex), trans="T", lower=True)


def unit_sphere_samples(h: HermitianForm, count: int, rng: np.random.Generator) -> np.ndarray:
    """Rows are uniform samples of the h-unit sphere (via the flat isometry)."""
    if count < 1:
        raise ValueError("count must be positive")
    n = h.n
    W = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    L = _cholesky(h)
    X = solve_triangular(L, W.T, trans="T", lower=True).T
    return X / np.linalg.norm(W, axis=1)[:, None]


def quartic_values(S: BihermitianForm, X: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """S(X,X̄,X,X̄) for each row of X, batched and checked real.

    Chunked so that million-sample Monte Carlo sweeps stay within memory.
    """
    X = np.asarray(X, dtype=complex)
    out = np.empty(X.shape[0])
    T = S.entries
    for lo in range(0, X.shape[0], chunk):
        sl = slice(lo, lo + chunk)
        Xc = X[sl]
        vals = np.einsum(
            "ijkl,ai,aj,ak,al->a", T, Xc, np.conj(Xc), Xc, np.conj(Xc), optimize=True
        )
        out[sl] = _require_real_array(vals, what="diagonal quartic value")
    return out


def hsc(S: BihermitianForm, h: HermitianForm, X) -> float:
    """Holomorphic sectional curvature S(X,X̄,X,X̄)/|X|_h^4 at X != 0."""
    X = np.asarray(X, dtype=complex)
    nrm = norm_h(X, h)
    if nrm <= 1e-300:
        raise ValueError("holomorphic sectional curvature is undefined at X = 0")
    val = S(X, X, X, X)
    val = require_real(val, scale=abs(val), tol=1e-12, what="S(X,X̄,X,X̄)")
    return val / nrm**4


def _pd_inverse(h: HermitianForm) -> np.ndarray:
    h.require_positive("metric")
    return np.linalg.inv(h.entries)


def ricci_trace(S: BihermitianForm, h: HermitianForm) -> HermitianForm:
    """The Ricci form Ric(X, Ȳ) = tr_h S(X, Ȳ, ·, ·).

    Computed both by h-inverse contraction and in an h-unitary frame; the two
    routes must agree to 1e-12, which guards the index wiring.
    """
    Hinv = _pd_inverse(h)
    ric = np.einsum("abkl,lk->ab", S.entries, Hinv)
    E = unitary_frame(h)
    ric_frame = np.einsum("abkl,km,lm->ab", S.entries, E, np.conj(E), optimize=True)
    scale = max(1.0, float(np.max(np.abs(ric))))
    if np.max(np.abs(ric - ric_frame)) > 1e-12 * scale:
        raise RealityError("h-trace routes disagree beyond 1e-12; corrupted input")
    return HermitianForm(0.5 * (ric + ric.conj().T))


def scalar(S: BihermitianForm, h: HermitianForm) -> float:
    """Scalar curvature: the h-trace of the Ricci form."""
    Hinv = _pd_inverse(h)
    ric = ricci_trace(S, h)
    val = np.trace(ric.entries @ Hinv)
    return require_real(val, scale=abs(val), what="scalar curvature")


def ric_plus(S: BihermitianForm, h: HermitianForm, X) -> float:
    """Ric(X,X̄) + S(X,X̄,X,X̄)/|X|_h^2, the Ricci-plus-sectional combination.

    Scales like |X|^2 under X -> cX.
    """
    X = np.asarray(X, dtype=complex)
    nrm2 = norm_h(X, h) ** 2
    if nrm2 <= 1e-300:
        raise ValueError("ric_plus is undefined at X = 0")
    ric = ricci_trace(S, h)
    quart = S(X, X, X, X)
    quart = require_real(quart, scale=abs(quart), tol=1e-12, what="S(X,X̄,X,X̄)")
    ric_val = require_real(ric(X), scale=abs(quart) + nrm2, what="Ric(X,X̄)")
    return ric_val + quart / nrm2


def random_bihermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> BihermitianForm:
    """A random symmetric bihermitian form with Gaussian entries."""
    raw = rng.standard_normal((n,) * 4) + 1j * rng.standard_normal((n,) * 4)
    return symmetrize(scale * raw)


def random_hermitian(n: int, rng: np.random.Generator, positive: bool = False) -> HermitianForm:
    """A random Hermitian form; ``positive=True`` returns a well-conditioned metric."""
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if positive:
        return HermitianForm(A @ A.conj().T / n + np.eye(n))
    return HermitianForm(0.5 * (A + A.conj().T))
