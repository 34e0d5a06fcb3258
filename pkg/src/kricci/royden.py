"""Fourth-roots-of-unity averaging identities and trace-level consequences.

Given two positive metrics g, h there is a frame that is g-unitary and
h-diagonal.  Summing a bihermitian form over the 4^n frame combinations
Z = sum_i eps_i E_i with eps_i in {1, i, -1, -i} collapses, by independence of
the phases, to mixed traces of the frame components.  The checks here compare
that brute-force enumeration against the closed form and evaluate the
trace-level inequalities that follow from pointwise curvature bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ResourceLimitError
from .forms import (
    BihermitianForm,
    CurvatureParams,
    HermitianForm,
    quartic_values,
    require_real,
    ricci_trace,
    scalar,
    unit_sphere_samples,
)

__all__ = [
    "BergerReport",
    "BruteSums",
    "InterpolationReport",
    "MixedTraceReport",
    "RicScalarReport",
    "RoydenReport",
    "berger_check",
    "g_unitary_h_diagonal_frame",
    "interpolation_check",
    "mixed_trace_bounds",
    "ric_scalar_matrix",
    "royden_identity_check",
    "royden_sum_bruteforce",
]

MAX_ENUMERATION_DIM = 8


def g_unitary_h_diagonal_frame(
    g: HermitianForm, h: HermitianForm
) -> tuple[np.ndarray, np.ndarray]:
    """A frame E with g(E_i, Ē_j) = δ_ij and h(E_i, Ē_j) = tau_i δ_ij.

    Returns ``(tau, E)`` with tau ascending; E's columns are the frame
    vectors.  Both forms must be positive definite.
    """
    if g.n != h.n:
        raise ValueError("g and h must have the same dimension")
    g.require_positive("g")
    h.require_positive("h")
    L = np.linalg.cholesky(g.entries)
    Ht = np.linalg.solve(L, np.linalg.solve(L, h.entries).conj().T).conj().T
    tau, V = np.linalg.eigh(0.5 * (Ht + Ht.conj().T))
    E = scipy.linalg.solve_triangular(L, np.conj(V), trans="T", lower=True)
    return tau, E


def _phase_rows(n: int) -> np.ndarray:
    if n > MAX_ENUMERATION_DIM:
        raise ResourceLimitError(
            f"4^{n} phase combinations exceed the enumeration guard (n <= {MAX_ENUMERATION_DIM})"
        )
    return np.array(list(itertools.product([1, 1j, -1, -1j], repeat=n)), dtype=complex)


@dataclass
class BruteSums:
    """Enumerated sums over all 4^n phase combinations of the frame."""

    quartic: float
    metric_quartic: float
    rho_weighted: float | None
    n_terms: int


def royden_sum_bruteforce(
    S: BihermitianForm,
    g: HermitianForm,
    h: HermitianForm,
    rho: HermitianForm | None = None,
    chunk: int = 8192,
) -> BruteSums:
    """Sum S(Z,Z̄,Z,Z̄), h(Z,Z̄)^2, and optionally h(Z,Z̄)rho(Z,Z̄) over all Z.

    Z ranges over the 4^n combinations sum_i eps_i E_i in the g-unitary
    h-diagonal frame.  Enumeration is explicit (chunked for memory) and guarded
    to n <= 8.
    """
    n = S.n
    if g.n != n or h.n != n or (rho is not None and rho.n != n):
        raise ValueError("dimension mismatch")
    _, E = g_unitary_h_diagonal_frame(g, h)
    eps = _phase_rows(n)
    quartic = 0.0
    metric = 0.0
    rho_weighted = 0.0 if rho is not None else None
    for lo in range(0, eps.shape[0], chunk):
        Z = eps[lo : lo + chunk] @ E.T
        quartic += float(quartic_values(S, Z, chunk=chunk).sum())
        hz = np.einsum("ai,ij,aj->a", Z, h.entries, np.conj(Z)).real
        metric += float((hz**2).sum())
        if rho is not None:
            rz = np.einsum("ai,ij,aj->a", Z, rho.entries, np.conj(Z)).real
            rho_weighted += float((hz * rz).sum())
    return BruteSums(
        quartic=quartic,
        metric_quartic=metric,
        rho_weighted=rho_weighted,
        n_terms=eps.shape[0],
    )


def _frame_components(S: BihermitianForm, E: np.ndarray):
    """Mixed diagonal S̃[i,i,k,k] and full diagonal S̃[i,i,i,i] in frame E."""
    T = S.entries
    mixed = np.einsum("pqrs,pi,qi,rk,sk->ik", T, E, np.conj(E), E, np.conj(E), optimize=True)
    diag = np.einsum("pqrs,pi,qi,ri,si->i", T, E, np.conj(E), E, np.conj(E), optimize=True)
    return mixed, diag


@dataclass
class RoydenReport:
    """Brute-force enumeration against the closed mixed-trace forms."""

    quartic_bruteforce: float
    quartic_closed: float
    quartic_residual: float
    metric_bruteforce: float
    metric_closed: float
    metric_residual: float
    rho_bruteforce: float | None
    rho_closed: float | None
    rho_residual: float | None
    n_terms: int
    ok: bool


def _relative_residual(brute: float, closed: float) -> float:
    return abs(brute - closed) / (1.0 + abs(closed))


def royden_identity_check(
    S: BihermitianForm,
    g: HermitianForm,
    h: HermitianForm,
    rho: HermitianForm | None = None,
    tol: float = 1e-10,
    chunk: int = 8192,
) -> RoydenReport:
    """Compare the 4^n enumeration against its closed form.

    The sums collapse to

        sum_eps S(Z,Z̄,Z,Z̄)      = 4^n (2 sum_ik S̃[iikk] - sum_i S̃[iiii])
        sum_eps h(Z,Z̄)^2         = 4^n (tr_g h)^2
        sum_eps h(Z,Z̄) rho(Z,Z̄) = 4^n (tr_g h)(tr_g rho)

    in the g-unitary h-diagonal frame, because only phase-cancelling index
    patterns survive the average.
    """
    brute = royden_sum_bruteforce(S, g, h, rho=rho, chunk=chunk)
    tau, E = g_unitary_h_diagonal_frame(g, h)
    mixed, diag = _frame_components(S, E)
    scale = 4.0 ** S.n
    mixed_sum = require_real(mixed.sum(), scale=np.abs(mixed).max(), what="mixed trace")
    diag_sum = require_real(diag.sum(), scale=np.abs(diag).max(), what="diagonal trace")
    quartic_closed = scale * (2.0 * mixed_sum - diag_sum)
    tr_gh = float(tau.sum())
    metric_closed = scale * tr_gh**2
    if rho is None:
        rho_brute = rho_closed = rho_res = None
    else:
        rho_frame = np.einsum("pi,pq,qj->ij", E, rho.entries, np.conj(E))
        tr_grho = require_real(np.trace(rho_frame), scale=tr_gh, what="tr_g rho")
        rho_closed = scale * tr_gh * tr_grho
        rho_brute = brute.rho_weighted
        rho_res = _relative_residual(rho_brute, rho_closed)
    q_res = _relative_residual(brute.quartic, quartic_closed)
    m_res = _relative_residual(brute.metric_quartic, metric_closed)
    worst = max(q_res, m_res, rho_res or 0.0)
    return RoydenReport(
        quartic_bruteforce=brute.quartic,
        quartic_closed=quartic_closed,
        quartic_residual=q_res,
        metric_bruteforce=brute.metric_quartic,
        metric_closed=metric_closed,
        metric_residual=m_res,
        rho_bruteforce=rho_brute,
        rho_closed=rho_closed,
        rho_residual=rho_res,
        n_terms=brute.n_terms,
        ok=worst <= tol,
    )


@dataclass
class MixedTraceReport:
    """Trace-level consequences of the pointwise mixed curvature bound."""

    lhs: float
    rhs_coarse: float
    rhs_refined: float
    slack_coarse: float
    slack_refined: float
    ok: bool


def mixed_trace_bounds(
    S: BihermitianForm,
    g: HermitianForm,
    h: HermitianForm,
    rho: HermitianForm,
    params: CurvatureParams,
    tol: float = 1e-8,
) -> MixedTraceReport:
    """Evaluate both averaged forms of the mixed-trace inequality.

    Under the pointwise bound alpha h(Z,Z̄) rho(Z,Z̄) + beta S(Z,Z̄,Z,Z̄) <=
    lam h(Z,Z̄)^2, averaging over the 4^n phases bounds the mixed trace
    lhs = 2 sum_ik S̃[iikk] by

        rhs_coarse  = (lam (tr_g h)^2 - alpha tr_g h tr_g rho) / beta
                      + sum_i S̃[iiii]
        rhs_refined = (lam / beta) ((tr_g h)^2 + |h|_g^2)
                      - (alpha / beta) (tr_g h tr_g rho + <omega_h, rho>_g).

    Slacks are rhs - lhs; both must be nonnegative (up to tol) for ``ok``.
    """
    tau, E = g_unitary_h_diagonal_frame(g, h)
    mixed, diag = _frame_components(S, E)
    lhs = 2.0 * require_real(mixed.sum(), scale=np.abs(mixed).max(), what="mixed trace")
    diag_sum = require_real(diag.sum(), scale=np.abs(diag).max(), what="diagonal trace")
    h_frame = np.einsum("pi,pq,qj->ij", E, h.entries, np.conj(E))
    rho_frame = np.einsum("pi,pq,qj->ij", E, rho.entries, np.conj(E))
    tr_gh = require_real(np.trace(h_frame), what="tr_g h")
    tr_grho = require_real(np.trace(rho_frame), scale=abs(tr_gh), what="tr_g rho")
    h_norm2 = float(np.sum(np.abs(h_frame) ** 2))
    pairing = require_real(np.trace(h_frame @ rho_frame), scale=h_norm2, what="<omega_h, rho>_g")
    a, b, lam = params.alpha, params.beta, params.lam
    rhs_coarse = (lam * tr_gh**2 - a * tr_gh * tr_grho) / b + diag_sum
    rhs_refined = (lam / b) * (tr_gh**2 + h_norm2) - (a / b) * (tr_gh * tr_grho + pairing)
    slack_coarse = rhs_coarse - lhs
    slack_refined = rhs_refined - lhs
    scale = 1.0 + abs(lhs)
    ok = slack_coarse >= -tol * scale and slack_refined >= -tol * scale
    return MixedTraceReport(
        lhs=lhs,
        rhs_coarse=rhs_coarse,
        rhs_refined=rhs_refined,
        slack_coarse=slack_coarse,
        slack_refined=slack_refined,
        ok=ok,
    )


@dataclass
class InterpolationReport:
    """Direction-wise Ricci/sectional interpolation inequality."""

    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    worst_margin: float
    ok: bool


def interpolation_check(
    S: BihermitianForm,
    h: HermitianForm,
    k: int,
    sigma: float,
    directions: np.ndarray,
    tol: float = 1e-8,
) -> InterpolationReport:
    """Check (k-1)|X|^2 Ric(X,X̄) + (n-k) S(X,X̄,X,X̄) <= -(n-1)(k+1) sigma |X|^4.

    The inequality interpolates between sectional (k = 1) and Ricci (k = n)
    bounds when every k-Ricci value is at most -(k+1) sigma; equality holds
    for -sigma times the model form.  ``directions`` is an (m, n) batch.
    """
    n = S.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    X = np.atleast_2d(np.asarray(directions, dtype=complex))
    norms2 = np.einsum("ai,ij,aj->a", X, h.entries, np.conj(X)).real
    if np.any(norms2 <= 0):
        raise ValueError("directions must be nonzero")
    ric = ricci_trace(S, h)
    ric_vals = np.einsum("ai,ij,aj->a", X, ric.entries, np.conj(X)).real
    quart = quartic_values(S, X)
    lhs = (k - 1) * norms2 * ric_vals + (n - k) * quart
    rhs = -(n - 1) * (k + 1) * sigma * norms2**2
    margins = rhs - lhs
    scale = 1.0 + float(np.max(np.abs(rhs)))
    worst = float(margins.min())
    return InterpolationReport(
        lhs=lhs,
        rhs=rhs,
        margins=margins,
        worst_margin=worst,
        ok=bool(worst >= -tol * scale),
    )


@dataclass
class RicScalarReport:
    """Matrix form of the scalar/Ricci comparison under a k-Ricci bound."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    max_eigenvalue: float
    ok: bool


def ric_scalar_matrix(
    S: BihermitianForm,
    h: HermitianForm,
    k: int,
    sigma: float,
    tol: float = 1e-10,
) -> RicScalarReport:
    """Check that (nk+n-k-2) 𝒮 h + n Ric + n(n+1)(n-1)(k+1) sigma h ⪯ 0.

    Negativity is measured through the eigenvalues of the matrix relative to
    h (generalized Hermitian eigenproblem).  The combination vanishes
    identically for -sigma times the model form.  Requires k >= 2; the k = 1
    case carries no content beyond the sectional bound itself.
    """
    n = S.n
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"need k <= n, got k={k}, n={n}")
    sc = scalar(S, h)
    ric = ricci_trace(S, h)
    D = (
        (n * k + n - k - 2) * sc * h.entries
        + n * ric.entries
        + n * (n + 1) * (n - 1) * (k + 1) * sigma * h.entries
    )
    D = 0.5 * (D + D.conj().T)
    eig = scipy.linalg.eigh(D, h.entries, eigvals_only=True)
    scale = 1.0 + float(np.max(np.abs(eig)))
    max_eig = float(eig.max())
    return RicScalarReport(
        matrix=D,
        eigenvalues=eig,
        max_eigenvalue=max_eig,
        ok=bool(max_eig <= tol * scale),
    )


@dataclass
class BergerReport:
    """Monte Carlo check of the sphere-average identity for scalar curvature."""

    scalar: float
    estimate: float
    std_error: float
    n_samples: int
    z: float
    ok: bool


def berger_check(
    S: BihermitianForm,
    h: HermitianForm,
    samples: int = 100_000,
    rng: np.random.Generator | None = None,
    z: float = 3.0,
) -> BergerReport:
    """Estimate 𝒮 = (n(n+1)/2) E[S(Z,Z̄,Z,Z̄)] over the h-unit sphere.

    Returns the exact scalar curvature, the Monte Carlo estimate, and its
    standard error; ``ok`` means the exact value sits within z standard
    errors (plus a roundoff floor for constant integrands).
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = rng if rng is not None else np.random.default_rng(0)
    n = S.n
    factor = n * (n + 1) / 2.0
    Z = unit_sphere_samples(h, samples, rng)
    vals = quartic_values(S, Z)
    estimate = factor * float(vals.mean())
    se = factor * float(vals.std(ddof=1)) / np.sqrt(samples)
    exact = scalar(S, h)
    deviation = abs(exact - estimate)
    ok = deviation <= z * se + 1e-12 * (1.0 + abs(exact))
    return BergerReport(
        scalar=exact,
        estimate=estimate,
        std_error=se,
        n_samples=samples,
        z=z,
        ok=bool(ok),
    )
