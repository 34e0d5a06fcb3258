"""Extremal k-Ricci values and a multistart upper-bound certifier.

For an h-unit direction X and a k-dimensional subspace containing X, spanned
by an h-orthonormal frame (E_1 = X, E_2, ..., E_k), the k-Ricci value is

    sum_i S(X, X̄, E_i, Ē_i).

Its extreme over all such subspaces splits into the diagonal quartic term
S(X, X̄, X, X̄) plus the sum of the (k-1) largest (or smallest) eigenvalues of
the Hermitian matrix M[p, q] = S(X, X̄, Q_p, Q̄_q) built on any h-orthonormal
frame Q of the h-orthocomplement of X.  ``certify_k_ricci`` maximises that
extreme over the unit sphere by projected gradient ascent from many starts
and reports whether a requested upper bound survives an independent
re-evaluation at the best point found.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .forms import (
    BihermitianForm,
    HermitianForm,
    SubspaceBasis,
    norm_h,
    require_real,
    unit_sphere_samples,
)

__all__ = [
    "Certificate",
    "CertifyOptions",
    "certify_k_ricci",
    "h_orthocomplement",
    "k_ricci_extreme_at",
    "k_ricci_on",
]


def k_ricci_on(S: BihermitianForm, h: HermitianForm, basis: SubspaceBasis) -> float:
    """The k-Ricci value of S in the direction of the frame's first column.

    ``basis`` must be an h-orthonormal frame whose column 0 is the
    distinguished direction X; the value is sum_i S(X, X̄, E_i, Ē_i).
    """
    if basis.n != S.n or basis.metric.n != h.n or h.n != S.n:
        raise ValueError("dimension mismatch between form, metric, and frame")
    cols = basis.columns
    X = cols[:, 0]
    val = np.einsum(
        "ijkl,i,j,kI,lI->", S.entries, X, np.conj(X), cols, np.conj(cols), optimize=True
    )
    return require_real(val, scale=abs(val), what="k-Ricci value")


def _metric_factors(h: HermitianForm):
    """Cholesky factor L (H = L L^H) and the h-unitary frame E = L^{-T}."""
    try:
        L = np.linalg.cholesky(h.entries)
    except np.linalg.LinAlgError as exc:
        raise ValueError("metric must be positive definite") from exc
    E = solve_triangular(L, np.eye(h.n, dtype=complex), trans="T", lower=True)
    return L, E


def _orthocomplement_batch(L: np.ndarray, E: np.ndarray, X: np.ndarray) -> np.ndarray:
    """h-orthonormal frames of the orthocomplements of the unit rows of X.

    Works in flat coordinates y = L^T x, where a Householder reflection sends
    y to a multiple of e_1; the reflected standard vectors e_2, ..., e_n pull
    back to the requested frame.  Returns shape (b, n, n-1).
    """
    b, n = X.shape
    Y = X @ L
    y0 = Y[:, 0]
    safe = np.where(np.abs(y0) > 0, np.abs(y0), 1.0)
    phase = np.where(np.abs(y0) > 0, y0 / safe, 1.0)
    u = Y.copy()
    u[:, 0] += phase
    unorm2 = np.einsum("bi,bi->b", u, np.conj(u)).real
    Qstd = np.repeat(np.eye(n, dtype=complex)[None, :, 1:], b, axis=0)
    Qstd -= 2.0 * u[:, :, None] * np.conj(u[:, None, 1:]) / unorm2[:, None, None]
    return np.einsum("ij,bjk->bik", E, Qstd)


def h_orthocomplement(h: HermitianForm, X) -> np.ndarray:
    """Columns form an h-orthonormal basis of the h-orthocomplement of X."""
    X = np.asarray(X, dtype=complex)
    nrm = norm_h(X, h)
    if nrm <= 1e-300:
        raise ValueError("orthocomplement is undefined at X = 0")
    L, E = _metric_factors(h)
    return _orthocomplement_batch(L, E, (X / nrm)[None, :])[0]


def _normalize_rows(X: np.ndarray, H: np.ndarray) -> np.ndarray:
    norms2 = np.einsum("bi,ij,bj->b", X, H, np.conj(X)).real
    return X / np.sqrt(norms2)[:, None]


def _batch_eval(T, H, L, E, X, k, with_grad=False):
    """Value (and Wirtinger cogradient) of the max-k-Ricci objective.

    Rows of X must be h-unit.  Returns (f,) or (f, G) where
    G[b, j] = df/d conj(X[b, j]) by the envelope rule for the eigenvalue sum,
    with the witnesses transported so they stay h-orthogonal to X.
    """
    cX = np.conj(X)
    T1 = np.einsum("pqrs,bp,bq->brs", T, X, cX, optimize=True)
    quart = np.einsum("brs,br,bs->b", T1, X, cX).real
    if k == 1:
        f = quart
        u = None
    else:
        Q = _orthocomplement_batch(L, E, X)
        M = np.einsum("brs,brP,bsQ->bPQ", T1, Q, np.conj(Q), optimize=True)
        M = 0.5 * (M + np.conj(np.swapaxes(M, 1, 2)))
        w, V = np.linalg.eigh(M)
        sel = slice(M.shape[1] - (k - 1), M.shape[1])
        f = quart + w[:, sel].sum(axis=1)
        u = np.einsum("bnP,bPi->bni", Q, np.conj(V[:, :, sel]))
    if not with_grad:
        return (f,)
    G = 2.0 * np.einsum("pjrs,bp,br,bs->bj", T, X, X, cX, optimize=True)
    if u is not None:
        W = np.einsum("bri,bsi->brs", u, np.conj(u))
        G += np.einsum("pjrs,bp,brs->bj", T, X, W, optimize=True)
        Hu = np.einsum("aj,bai->bji", H, u)
        val = np.einsum("brs,br,bsi->bi", T1, X, np.conj(u))
        G -= np.einsum("bji,bi->bj", Hu, val)
    return f, G


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate v so its largest-modulus component is real and positive."""
    i = int(np.argmax(np.abs(v)))
    a = v[i]
    return v if abs(a) == 0 else v * (np.conj(a) / abs(a))


def k_ricci_extreme_at(
    S: BihermitianForm,
    h: HermitianForm,
    X,
    k: int,
    which: str = "max",
) -> tuple[float, SubspaceBasis]:
    """Extremal k-Ricci value at the direction X, with an attaining frame.

    Returns ``(value, basis)`` where ``basis`` columns are X normalised
    followed by the k-1 extremal witnesses in the orthocomplement, ordered by
    decreasing (``which="max"``) or increasing (``which="min"``) eigenvalue.
    """
    if which not in ("max", "min"):
        raise ValueError(f"which must be 'max' or 'min', got {which!r}")
    n = S.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if h.n != n:
        raise ValueError("metric dimension does not match the form")
    X = np.asarray(X, dtype=complex)
    nrm = norm_h(X, h)
    if nrm <= 1e-300:
        raise ValueError("k-Ricci is undefined at X = 0")
    Xh = X / nrm
    quart = S(Xh, Xh, Xh, Xh)
    value = require_real(quart, scale=abs(quart), tol=1e-12, what="S(X,X̄,X,X̄)")
    if k == 1:
        return value, SubspaceBasis(Xh[:, None], h)
    Q = h_orthocomplement(h, Xh)
    M = np.einsum(
        "pqrs,p,q,rP,sQ->PQ", S.entries, Xh, np.conj(Xh), Q, np.conj(Q), optimize=True
    )
    M = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(M)
    if which == "max":
        order = np.argsort(w)[::-1][: k - 1]
    else:
        order = np.argsort(w)[: k - 1]
    value += float(w[order].sum())
    witnesses = [_canonical_phase(Q @ np.conj(V[:, i])) for i in order]
    frame = np.column_stack([Xh, *witnesses])
    return value, SubspaceBasis(frame, h)


@dataclass
class CertifyOptions:
    """Knobs for the multistart projected gradient ascent."""

    starts: int = 64
    presweep: int = 1024
    max_iter: int = 200
    grad_tol: float = 1e-9
    value_tol: float = 1e-8
    step_init: float = 0.5
    armijo_c: float = 1e-4
    backtrack_max: int = 30
    chunk: int = 256

    def __post_init__(self):
        if self.starts < 1 or self.presweep < self.starts:
            raise ValueError("need presweep >= starts >= 1")


@dataclass
class Certificate:
    """Outcome of an upper-bound check on the maximal k-Ricci value.

    ``status`` is ``"satisfied"``, ``"violated"``, or ``"inconclusive"``.
    ``value`` is the best maximum found (re-evaluated independently at the
    reported witness) and ``margin = bound - value``, so a violation has a
    negative margin beyond the value tolerance.  ``witness`` attains ``value``
    via :func:`k_ricci_on`.
    """

    status: str
    value: float
    bound: float
    margin: float
    k: int
    witness: SubspaceBasis | None
    n_converged: int
    iterations: int


def certify_k_ricci(
    S: BihermitianForm,
    h: HermitianForm,
    k: int,
    bound: float,
    options: CertifyOptions | None = None,
    rng: np.random.Generator | None = None,
) -> Certificate:
    """Check sup over unit X of the maximal k-Ricci value against ``bound``.

    A presweep scores random sphere points, the best become starts for a
    projected gradient ascent with Armijo backtracking, and the best final
    point is re-evaluated from scratch.  The verdict is ``"violated"`` only
    when the re-evaluated value exceeds ``bound`` by more than ``value_tol``,
    and ``"inconclusive"`` only when no start reached a first-order point
    (small projected gradient, or a line search that backtracked to
    exhaustion) within the iteration budget.
    """
    opts = options or CertifyOptions()
    rng = rng if rng is not None else np.random.default_rng(0)
    n = S.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if h.n != n:
        raise ValueError("metric dimension does not match the form")
    bound = float(bound)
    T = S.entries
    H = h.entries
    L, E = _metric_factors(h)

    sweep = unit_sphere_samples(h, opts.presweep, rng)
    scores = np.empty(opts.presweep)
    for lo in range(0, opts.presweep, opts.chunk):
        sl = slice(lo, lo + opts.chunk)
        scores[sl] = _batch_eval(T, H, L, E, sweep[sl], k)[0]
    X = sweep[np.argsort(scores)[::-1][: opts.starts]].copy()

    b = X.shape[0]
    f = _batch_eval(T, H, L, E, X, k)[0]
    step = np.full(b, opts.step_init)
    converged = np.zeros(b, dtype=bool)
    stalled = np.zeros(b, dtype=bool)
    iterations = 0
    for it in range(opts.max_iter):
        active = ~(converged | stalled)
        if not active.any():
            break
        iterations = it + 1
        rows = np.flatnonzero(active)
        Xa = X[rows]
        fa, Ga = _batch_eval(T, H, L, E, Xa, k, with_grad=True)
        f[rows] = fa
        N = Xa @ H
        coef = (
            np.einsum("bi,bi->b", np.conj(N), Ga).real
            / np.einsum("bi,bi->b", np.conj(N), N).real
        )
        xi = Ga - coef[:, None] * N
        xi_norm2 = np.einsum("bi,bi->b", np.conj(xi), xi).real
        done = np.sqrt(xi_norm2) <= opts.grad_tol * (1.0 + np.abs(fa))
        converged[rows[done]] = True
        work = np.flatnonzero(~done)
        if work.size == 0:
            continue
        wrows = rows[work]
        Xw, fw, xiw, slope = Xa[work], fa[work], xi[work], 2.0 * xi_norm2[work]
        s = step[wrows].copy()
        ok = np.zeros(work.size, dtype=bool)
        for _ in range(opts.backtrack_max):
            todo = np.flatnonzero(~ok)
            if todo.size == 0:
                break
            cand = _normalize_rows(Xw[todo] + s[todo, None] * xiw[todo], H)
            fc = _batch_eval(T, H, L, E, cand, k)[0]
            good = fc >= fw[todo] + opts.armijo_c * s[todo] * slope[todo]
            hit = todo[good]
            Xw[hit] = cand[good]
            fw[hit] = fc[good]
            ok[hit] = True
            s[todo[~good]] *= 0.5
        stalled[wrows[~ok]] = True
        X[wrows[ok]] = Xw[ok]
        f[wrows[ok]] = fw[ok]
        step[wrows] = np.minimum(s * 2.0, opts.step_init)

    best = int(np.argmax(f))
    value, witness = k_ricci_extreme_at(S, h, X[best], k)
    # The subspace term is a max of eigenvalue sums, so maximizers can sit at
    # eigenvalue crossings where the objective is nonsmooth and the projected
    # gradient never becomes small.  A start whose line search backtracked to
    # exhaustion without an admissible increase is first-order terminal there,
    # so it counts as converged alongside the small-gradient exits.
    n_conv = int((converged | stalled).sum())
    if value > bound + opts.value_tol:
        status = "violated"
    elif n_conv > 0:
        status = "satisfied"
    else:
        status = "inconclusive"
    return Certificate(
        status=status,
        value=value,
        bound=bound,
        margin=bound - value,
        k=k,
        witness=witness,
        n_converged=n_conv,
        iterations=iterations,
    )
