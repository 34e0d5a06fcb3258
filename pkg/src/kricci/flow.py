"""A twisted parabolic potential flow on flat torus backgrounds.

The background metric is h = I + d dbar (background potential) and the twist
is eta = c omega_h + d dbar u.  The evolving metric is reconstructed from a
scalar potential phi(t) as

    g(t) = h - t (Ric(h) + eta) + d dbar phi,      phi(0) = 0,

and the potential satisfies

    dphi/dt = log det g(t) - log det h.

Time stepping is explicit midpoint (second order), with the step bounded by
an explicit-diffusion limit proportional to the smallest metric eigenvalue.
When a substep loses positivity the step is retried with half the step size
a bounded number of times before the flow is declared degenerate.

The checks in this module compare the recorded trajectory against the
structural consequences of the equation: the volume-ratio and twisted scalar
bounds in terms of the initial infimum, the identities obeyed by phi and its
time derivative, the Schwarz-type inequality for log tr_g h, the telescoped
trace evolution bound, and the monotone combinations of log tr_g h with the
potentials.  Time derivatives are taken with the second-order nonuniform
3-point formula, so all residuals shrink at order dt^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, FlowDegenerateError, HypothesisError
from .grid import (
    MetricField,
    PeriodicGrid,
    curvature_field,
    dbar_hessian,
    laplacian,
    metric_from_potential,
    positivity_margin,
    ricci_field,
)

__all__ = [
    "DiagnosticsRow",
    "FlowConfig",
    "FlowModel",
    "FlowResult",
    "FlowSnapshot",
    "PotentialIdentityReport",
    "ScalarBoundReport",
    "SchwarzReport",
    "TraceEvolutionReport",
    "TwistSpec",
    "check_potential_identities",
    "check_scalar_bound",
    "check_schwarz",
    "check_trace_evolution",
    "homogeneous_phi",
    "homogeneous_phidot",
    "horizon_estimate",
    "monotone_quantities",
    "run_flow",
]


@dataclass
class TwistSpec:
    """Twist eta = c omega_h + d dbar potential."""

    c: float = 0.0
    potential: np.ndarray | None = None


@dataclass
class FlowConfig:
    grid: PeriodicGrid
    background: np.ndarray | None = None
    twist: TwistSpec = field(default_factory=TwistSpec)
    t_final: float = 1.0
    dt_initial: float = 1e-3
    cfl_safety: float = 0.8
    diagnostics_every: int = 10
    alpha: float = 1.0
    beta: float = 1.0
    sigma_init: float | None = None
    max_halvings: int = 10
    max_steps: int = 200_000

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if not self.dt_initial > 0:
            raise ValueError("dt_initial must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.diagnostics_every < 1:
            raise ValueError("diagnostics_every must be at least 1")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")


def _real_trace_pair(ginv: np.ndarray, other: np.ndarray) -> np.ndarray:
    """tr_g of a Hermitian matrix field, checked real."""
    out = np.einsum("...ji,...ij->...", ginv, other)
    worst = float(np.max(np.abs(out.imag)))
    if worst > 1e-9 * (1.0 + float(np.max(np.abs(out.real)))):
        raise ValueError(f"metric trace must be real; got imaginary part {worst:.3e}")
    return out.real


class FlowModel:
    """Background data and metric reconstruction for one flow configuration."""

    def __init__(self, config: FlowConfig):
        grid = config.grid
        self.grid = grid
        self.config = config
        bg = (
            np.zeros(grid.shape)
            if config.background is None
            else np.asarray(config.background, dtype=float)
        )
        if bg.shape != grid.shape:
            raise ValueError(f"background potential must have shape {grid.shape}")
        self.h = metric_from_potential(grid, bg).require_positive("background metric")
        self.ric_h = ricci_field(grid, self.h)
        u = (
            np.zeros(grid.shape)
            if config.twist.potential is None
            else np.asarray(config.twist.potential, dtype=float)
        )
        if u.shape != grid.shape:
            raise ValueError(f"twist potential must have shape {grid.shape}")
        self.u = u
        self.c = float(config.twist.c)
        self.eta = self.c * self.h.values + dbar_hessian(grid, u)
        self._logdet_h = self.h.log_determinant()
        self._drift = self.ric_h.values + self.eta

    def reconstruct(self, t: float, phi: np.ndarray) -> MetricField:
        values = self.h.values - t * self._drift + dbar_hessian(self.grid, phi)
        return MetricField(self.grid, values)

    def phidot_of(self, g: MetricField) -> np.ndarray:
        return g.log_determinant() - self._logdet_h

    def rhs(self, t: float, phi: np.ndarray) -> np.ndarray:
        g = self.reconstruct(t, phi)
        g.require_positive("flow metric")
        return self.phidot_of(g)


@dataclass
class FlowSnapshot:
    t: float
    phi: np.ndarray
    phidot: np.ndarray


@dataclass
class DiagnosticsRow:
    t: float
    sup_phidot: float
    inf_scalar_plus_tr_eta: float
    bound_volume_upper: float
    positivity_margin: float
    sup_G: float
    schwarz_min_margin: float


@dataclass
class FlowResult:
    config: FlowConfig
    model: FlowModel
    sigma: float
    snapshots: list[FlowSnapshot]
    rows: list[DiagnosticsRow]
    steps: int

    @property
    def final(self) -> FlowSnapshot:
        return self.snapshots[-1]


def _initial_sigma(model: FlowModel) -> float:
    """Barrier scale from the initial twisted scalar infimum.

    With m0 = inf(scal(g0) + tr_{g0} eta), the comparison ODE keeps
    scal + tr eta >= -n/(t + sigma) and sup dphi/dt <= n log(1 + t/sigma)
    for sigma = n / (-m0); a nonnegative infimum never forces a barrier, so
    sigma is infinite there and both bounds degenerate gracefully.
    """
    grid = model.grid
    g0 = model.h
    ginv = g0.inverse()
    scal = _real_trace_pair(ginv, ricci_field(grid, g0).values)
    treta = _real_trace_pair(ginv, model.eta)
    m0 = float((scal + treta).min())
    if m0 < 0:
        return grid.n / (-m0)
    return math.inf


def _rk2_step(model: FlowModel, t: float, phi: np.ndarray, dt: float):
    """One explicit midpoint step; returns (phi_new, phidot_new, margin_new)."""
    k1 = model.rhs(t, phi)
    k2 = model.rhs(t + 0.5 * dt, phi + (0.5 * dt) * k1)
    phi_new = phi + dt * k2
    g_new = model.reconstruct(t + dt, phi_new)
    g_new.require_positive("flow metric")
    return phi_new, model.phidot_of(g_new), positivity_margin(g_new)


def run_flow(config: FlowConfig) -> FlowResult:
    """Integrate the flow to t_final, recording snapshots and diagnostics.

    Raises :class:`FlowDegenerateError` when the metric cannot be kept
    positive even after halving the step ``max_halvings`` times, when the
    step collapses below dt_initial * 2^-40, or when the step budget runs
    out before t_final.
    """
    model = FlowModel(config)
    grid = config.grid
    n = grid.n
    sigma = _initial_sigma(model)
    phi = np.zeros(grid.shape)
    t = 0.0
    phidot = model.phidot_of(model.h)
    margin = positivity_margin(model.h)
    snapshots = [FlowSnapshot(t=0.0, phi=phi.copy(), phidot=phidot.copy())]
    steps = 0
    dt_floor = config.dt_initial * 2.0**-40
    cfl = config.cfl_safety * grid.spacing**2 / (2.0 * n)
    while t < config.t_final * (1.0 - 1e-12):
        if steps >= config.max_steps:
            raise FlowDegenerateError(
                f"step budget {config.max_steps} exhausted at t={t:.6g}",
                t=t,
                margin=margin,
            )
        dt = min(config.dt_initial, cfl * margin, config.t_final - t)
        if dt <= dt_floor:
            raise FlowDegenerateError(
                f"step size collapsed at t={t:.6g} (metric margin {margin:.3e})",
                t=t,
                margin=margin,
            )
        accepted = None
        for _ in range(config.max_halvings + 1):
            try:
                accepted = _rk2_step(model, t, phi, dt)
                break
            except DegeneracyError as err:
                last_margin = err.margin
                dt *= 0.5
        if accepted is None:
            raise FlowDegenerateError(
                f"flow degenerate at t={t:.6g} after {config.max_halvings} halvings",
                t=t,
                margin=last_margin,
            )
        phi, phidot, margin = accepted
        t += dt
        steps += 1
        if steps % config.diagnostics_every == 0 or t >= config.t_final * (1.0 - 1e-12):
            if not np.isclose(snapshots[-1].t, t, rtol=0, atol=1e-15):
                snapshots.append(FlowSnapshot(t=t, phi=phi.copy(), phidot=phidot.copy()))
    result = FlowResult(
        config=config,
        model=model,
        sigma=sigma,
        snapshots=snapshots,
        rows=[],
        steps=steps,
    )
    result.rows = _diagnostics(result)
    return result


def homogeneous_phi(n: int, c: float, t) -> np.ndarray:
    """Closed-form spatially constant potential for flat h and eta = c omega_h."""
    t = np.asarray(t, dtype=float)
    if c == 0.0:
        return np.zeros_like(t)
    return n * ((t - 1.0 / c) * np.log1p(-c * t) - t)


def homogeneous_phidot(n: int, c: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return n * np.log1p(-c * t)


def _volume_upper_bound(n: int, sigma: float, t: float) -> float:
    if math.isinf(sigma):
        return 0.0
    return n * math.log1p(t / sigma)


def monotone_quantities(
    model: FlowModel,
    t: float,
    phi: np.ndarray,
    phidot: np.ndarray,
    alpha: float = 1.0,
    beta: float = 1.0,
    twist_potential: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """The fields F and G whose suprema decay along the flow.

        F = log tr_g h + (1 + alpha/beta) u - (alpha/beta)(phidot + phi_twist)
        G = F + (1 + alpha n / beta) log t

    ``twist_potential`` (phi_twist) defaults to the twist's own potential u.
    Only positive times are admissible because of the log t term.
    """
    if t <= 0:
        raise ValueError("monotone quantities are defined for t > 0 only")
    grid = model.grid
    g = model.reconstruct(t, phi)
    g.require_positive("flow metric")
    lam = _real_trace_pair(g.inverse(), model.h.values)
    phi_twist = model.u if twist_potential is None else twist_potential
    r = alpha / beta
    F = np.log(lam) + (1.0 + r) * model.u - r * (phidot + phi_twist)
    G = F + (1.0 + r * grid.n) * math.log(t)
    return F, G


def _nonuniform_dt(f_prev, f_mid, f_next, a: float, b: float):
    """Second-order derivative at the middle of three unevenly spaced samples.

    ``a`` is the gap to the previous sample and ``b`` to the next.
    """
    return (f_next * a**2 - f_prev * b**2 + f_mid * (b**2 - a**2)) / (a * b * (a + b))


def _diagnostics(result: FlowResult) -> list[DiagnosticsRow]:
    model = result.model
    grid = model.grid
    config = result.config
    n = grid.n
    lam_logs = []
    rows_partial = []
    for snap in result.snapshots:
        g = model.reconstruct(snap.t, snap.phi)
        g.require_positive("flow metric")
        ginv = g.inverse()
        scal = _real_trace_pair(ginv, ricci_field(grid, g).values)
        treta = _real_trace_pair(ginv, model.eta)
        lam = _real_trace_pair(ginv, model.h.values)
        lam_logs.append(np.log(lam))
        if snap.t > 0:
            _, G = monotone_quantities(
                model, snap.t, snap.phi, snap.phidot, config.alpha, config.beta
            )
            sup_G = float(G.max())
        else:
            sup_G = -math.inf
        rows_partial.append(
            DiagnosticsRow(
                t=snap.t,
                sup_phidot=float(snap.phidot.max()),
                inf_scalar_plus_tr_eta=float((scal + treta).min()),
                bound_volume_upper=_volume_upper_bound(n, result.sigma, snap.t),
                positivity_margin=positivity_margin(g),
                sup_G=sup_G,
                schwarz_min_margin=math.nan,
            )
        )
    margins = _schwarz_margins(result, lam_logs)
    for row, margin in zip(rows_partial, margins):
        row.schwarz_min_margin = margin
    return rows_partial


def _schwarz_margins(result: FlowResult, lam_logs: list[np.ndarray]) -> list[float]:
    """Min-over-grid margins of the Schwarz-type inequality per interior snapshot.

        (d/dt - Lap_g) log tr_g h  >=  (1/Lam) tr_g tr_g R_h
                                       + (1/Lam) tr(h g^-1 eta g^-1)

    Endpoint snapshots have no centered time derivative and report NaN.
    """
    model = result.model
    grid = model.grid
    snaps = result.snapshots
    R_h = curvature_field(grid, model.h)
    margins = [math.nan] * len(snaps)
    for i in range(1, len(snaps) - 1):
        t_prev, t_mid, t_next = snaps[i - 1].t, snaps[i].t, snaps[i + 1].t
        a, b = t_mid - t_prev, t_next - t_mid
        dlog = _nonuniform_dt(lam_logs[i - 1], lam_logs[i], lam_logs[i + 1], a, b)
        g = model.reconstruct(t_mid, snaps[i].phi)
        ginv = g.inverse()
        lam = np.exp(lam_logs[i])
        lhs = dlog - laplacian(grid, g, lam_logs[i])
        double_trace = np.einsum("...ji,...lk,...ijkl->...", ginv, ginv, R_h, optimize=True)
        twist_trace = np.einsum(
            "...li,...jk,...ij,...kl->...",
            ginv,
            ginv,
            model.h.values,
            model.eta,
            optimize=True,
        )
        rhs = (double_trace.real + twist_trace.real) / lam
        margins[i] = float((lhs - rhs).min())
    return margins


@dataclass
class ScalarBoundReport:
    times: np.ndarray
    values: np.ndarray
    bounds: np.ndarray
    min_margin: float
    ok: bool


def check_scalar_bound(result: FlowResult, tol: float = 1e-8) -> ScalarBoundReport:
    """Check inf(scal(g_t) + tr_{g_t} eta) >= -n / (t + sigma) along the flow."""
    n = result.config.grid.n
    times = np.array([row.t for row in result.rows])
    values = np.array([row.inf_scalar_plus_tr_eta for row in result.rows])
    if math.isinf(result.sigma):
        bounds = np.zeros_like(times)
    else:
        bounds = -n / (times + result.sigma)
    margins = values - bounds
    scale = 1.0 + float(np.max(np.abs(bounds)))
    min_margin = float(margins.min())
    return ScalarBoundReport(
        times=times,
        values=values,
        bounds=bounds,
        min_margin=min_margin,
        ok=bool(min_margin >= -tol * scale),
    )


@dataclass
class PotentialIdentityReport:
    times: np.ndarray
    residual_phi: float
    residual_phidot: float


def check_potential_identities(result: FlowResult) -> PotentialIdentityReport:
    """Residuals of d phi/dt = phidot and the evolution of phidot itself.

    The second identity, d phidot/dt = -tr_g(Ric(h) + eta) + Lap_g phidot,
    holds exactly for the semi-discrete system with the same discrete
    operators, so both residuals measure pure time-discretization error and
    shrink at second order in the step size.
    """
    model = result.model
    grid = model.grid
    snaps = result.snapshots
    if len(snaps) < 3:
        raise ValueError("need at least three snapshots for centered differences")
    res_phi = 0.0
    res_phidot = 0.0
    times = []
    for i in range(1, len(snaps) - 1):
        a = snaps[i].t - snaps[i - 1].t
        b = snaps[i + 1].t - snaps[i].t
        dphi = _nonuniform_dt(snaps[i - 1].phi, snaps[i].phi, snaps[i + 1].phi, a, b)
        dphidot = _nonuniform_dt(
            snaps[i - 1].phidot, snaps[i].phidot, snaps[i + 1].phidot, a, b
        )
        g = model.reconstruct(snaps[i].t, snaps[i].phi)
        g.require_positive("flow metric")
        drift = _real_trace_pair(g.inverse(), model.ric_h.values + model.eta)
        rhs = -drift + laplacian(grid, g, snaps[i].phidot)
        res_phi = max(res_phi, float(np.max(np.abs(dphi - snaps[i].phidot))))
        res_phidot = max(res_phidot, float(np.max(np.abs(dphidot - rhs))))
        times.append(snaps[i].t)
    return PotentialIdentityReport(
        times=np.array(times),
        residual_phi=res_phi,
        residual_phidot=res_phidot,
    )


@dataclass
class SchwarzReport:
    times: np.ndarray
    margins: np.ndarray
    min_margin: float
    worst_negative: float


def check_schwarz(result: FlowResult) -> SchwarzReport:
    """Collect the per-snapshot Schwarz margins (interior snapshots only).

    ``worst_negative`` is the magnitude of the most negative margin, zero if
    none are negative; the inequality is exact for the continuum flow, so the
    negative part is pure discretization error.
    """
    rows = [row for row in result.rows if not math.isnan(row.schwarz_min_margin)]
    times = np.array([row.t for row in rows])
    margins = np.array([row.schwarz_min_margin for row in rows])
    if margins.size == 0:
        raise ValueError("no interior snapshots with Schwarz margins")
    min_margin = float(margins.min())
    return SchwarzReport(
        times=times,
        margins=margins,
        min_margin=min_margin,
        worst_negative=max(0.0, -min_margin),
    )


@dataclass
class TraceEvolutionReport:
    times: np.ndarray
    sup_values: np.ndarray
    max_increase: float
    differential_min_margin: float
    mu: float
    ok: bool


def check_trace_evolution(
    result: FlowResult,
    mu: float,
    twist_potential: np.ndarray | None = None,
    tol: float = 1e-8,
) -> TraceEvolutionReport:
    """Telescoped decay of sup(log tr_g h - Q) under the certified hypotheses.

    Requires eta to be an exact complex Hessian (c = 0), the twisted Ricci
    form rho = Ric(h) + d dbar phi_twist to sit strictly below
    mu omega_h + d dbar v with v = (2 beta / alpha) u, and the pointwise
    mixed-curvature level of the background to be certified nonpositive by
    the eigenvalue estimate.  Violations raise :class:`HypothesisError`
    naming the failing hypothesis.  With

        B = alpha mu (n - 1) / (2 n beta),   w = t phidot - phi - n t,
        Q = -B w - (alpha / (2 beta)) v + (alpha / beta)(phidot + phi_twist - u),

    the supremum of log tr_g h - Q must be non-increasing in t; the
    centered-difference margin of the differential form is reported as well.
    """
    model = result.model
    grid = model.grid
    config = result.config
    n = grid.n
    alpha, beta = config.alpha, config.beta
    if model.c != 0.0:
        raise HypothesisError(
            "eta is an exact complex Hessian",
            f"twist has c = {model.c}, so eta carries a multiple of omega_h",
        )
    phi_twist = model.u if twist_potential is None else np.asarray(twist_potential, dtype=float)
    v = (2.0 * beta / alpha) * model.u
    rho = model.ric_h.values + dbar_hessian(grid, phi_twist)
    gap = mu * model.h.values + dbar_hessian(grid, v) - rho
    gap_margin = float(np.linalg.eigvalsh(gap)[..., 0].min())
    if gap_margin <= 0:
        raise HypothesisError(
            "rho < mu omega_h + d dbar v",
            f"pointwise gap has min eigenvalue {gap_margin:.3e}",
        )
    lam_est = _mixed_level_estimate(model, rho, alpha, beta)
    if lam_est > tol:
        raise HypothesisError(
            "pointwise mixed-curvature level <= 0",
            f"eigenvalue estimate gives sup lambda = {lam_est:.3e}",
        )
    B = alpha * mu * (n - 1) / (2.0 * n * beta)
    sup_vals = []
    times = []
    fields = []
    for snap in result.snapshots:
        g = model.reconstruct(snap.t, snap.phi)
        g.require_positive("flow metric")
        lam = _real_trace_pair(g.inverse(), model.h.values)
        w = snap.t * snap.phidot - snap.phi - n * snap.t
        Q = (
            -B * w
            - (alpha / (2.0 * beta)) * v
            + (alpha / beta) * (snap.phidot + phi_twist - model.u)
        )
        field_val = np.log(lam) - Q
        fields.append(field_val)
        sup_vals.append(float(field_val.max()))
        times.append(snap.t)
    sup_vals = np.array(sup_vals)
    times = np.array(times)
    increases = np.diff(sup_vals)
    max_increase = float(increases.max()) if increases.size else 0.0
    diff_margin = math.inf
    for i in range(1, len(result.snapshots) - 1):
        a = times[i] - times[i - 1]
        b = times[i + 1] - times[i]
        dfield = _nonuniform_dt(fields[i - 1], fields[i], fields[i + 1], a, b)
        g = model.reconstruct(times[i], result.snapshots[i].phi)
        heat = dfield - laplacian(grid, g, fields[i])
        diff_margin = min(diff_margin, float((-heat).min()))
    scale = 1.0 + float(np.max(np.abs(sup_vals)))
    return TraceEvolutionReport(
        times=times,
        sup_values=sup_vals,
        max_increase=max_increase,
        differential_min_margin=diff_margin,
        mu=mu,
        ok=bool(max_increase <= tol * scale),
    )


def _mixed_level_estimate(model: FlowModel, rho: np.ndarray, alpha: float, beta: float) -> float:
    """Upper bound for the pointwise level of alpha h rho + beta R_h.

    In an h-unitary frame the level is at most alpha lambda_max(rho relative
    to h) plus beta times the largest eigenvalue of the curvature tensor
    reshaped over its (unbarred, barred) index pairs; the estimate is exact
    for flat backgrounds.
    """
    grid = model.grid
    n = grid.n
    Lh = np.linalg.cholesky(model.h.values)
    rho_flat = np.linalg.solve(Lh, np.conj(np.swapaxes(np.linalg.solve(Lh, rho), -1, -2)))
    rho_flat = 0.5 * (rho_flat + np.conj(np.swapaxes(rho_flat, -1, -2)))
    rho_top = np.linalg.eigvalsh(rho_flat)[..., -1]
    E = np.linalg.inv(np.swapaxes(Lh, -1, -2))
    R = curvature_field(grid, model.h)
    R_frame = np.einsum(
        "...ijkl,...ia,...jb,...kc,...ld->...abcd",
        R,
        E,
        np.conj(E),
        E,
        np.conj(E),
        optimize=True,
    )
    paired = R_frame.transpose(
        tuple(range(2 * grid.n)) + (2 * grid.n, 2 * grid.n + 2, 2 * grid.n + 1, 2 * grid.n + 3)
    ).reshape(grid.shape + (n * n, n * n))
    paired = 0.5 * (paired + np.conj(np.swapaxes(paired, -1, -2)))
    curv_top = np.linalg.eigvalsh(paired)[..., -1]
    return float((alpha * rho_top + beta * curv_top).max())


def horizon_estimate(result: FlowResult, window: int = 10) -> float:
    """Extrapolated degeneracy time from the last positivity margins.

    Fits a line through the final ``window`` (t, margin) samples: returns the
    root if the fit decreases, +inf if it does not, and NaN when fewer than
    ``window`` samples exist (inconclusive).
    """
    rows = result.rows
    if len(rows) < window:
        return math.nan
    tail = rows[-window:]
    times = np.array([row.t for row in tail])
    margins = np.array([row.positivity_margin for row in tail])
    slope, intercept = np.polyfit(times, margins, 1)
    if slope >= 0:
        return math.inf
    return float(-intercept / slope)
