"""Lorentzian and exponential-decay fits with a small Levenberg-Marquardt solver.

Both models have analytic Jacobians.  Abscissae and ordinates are rescaled
to order one before solving so the same damping heuristics work for a
1 MHz resonance and a 20 ms decay alike; parameters and covariances are
mapped back afterwards.

With ``sigma`` given the covariance is absolute, i.e. ``sigma`` is taken as
the true 1-sigma error of each point.  Without it the covariance is scaled
by the residual variance.
"""

from dataclasses import dataclass, field

import numpy as np


class FitError(ValueError):
    """Data that cannot constrain the model (too few points, flat data, bad sigma)."""


@dataclass
class FitResult:
    model: str
    params: dict
    uncertainties: dict
    residual_norm: float
    converged: bool
    n_points: int
    fixed: tuple = ()
    start_costs: list = field(default_factory=list)

    def __getitem__(self, name):
        return self.params[name]

    def to_dict(self):
        return {
            "model": self.model,
            "params": {k: float(v) for k, v in self.params.items()},
            "uncertainties": {k: float(v) for k, v in self.uncertainties.items()},
            "residual_norm": float(self.residual_norm),
            "converged": bool(self.converged),
            "n_points": int(self.n_points),
            "fixed": list(self.fixed),
        }


def levenberg_marquardt(resid_jac, p0, max_iter=500, xtol=1e-13, ftol=1e-16):
    """Minimize ``0.5 |r(p)|^2`` given ``resid_jac(p) -> (r, J)``.

    Marquardt's diagonal scaling; returns ``(p, cost, converged, J)``.
    Iteration stops when the step or the relative cost drop falls below
    ``xtol`` or ``ftol``.  Near the minimum the cost is quadratic in the
    parameters, so the cost test alone leaves them at ~sqrt(machine epsilon);
    ``ftol=0`` polishes on the step size only, accepting steps whose cost
    matches the current one to rounding.  A step that cannot lower the cost
    even under heavy damping means the point is stationary to working
    precision and counts as converged.
    """
    p = np.array(p0, dtype=float)
    r, J = resid_jac(p)
    cost = 0.5 * float(r @ r)
    lam = 1e-3
    converged = False
    for _ in range(max_iter):
        g = J.T @ r
        H = J.T @ J
        d = np.maximum(np.diag(H), 1e-12 * max(np.max(np.diag(H)), 1e-300))
        improved = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(H + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            p_new = p + step
            r_new, J_new = resid_jac(p_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost * (1 + 8 * np.finfo(float).eps):
                improved = True
                break
            lam *= 4.0
        if not improved:
            converged = True
            break
        small_step = np.all(np.abs(step) <= xtol * (np.abs(p) + xtol))
        small_drop = ftol > 0 and cost - cost_new <= ftol * cost
        p, r, J, cost = p_new, r_new, J_new, cost_new
        lam = max(lam / 3.0, 1e-12)
        if small_step or small_drop or cost == 0.0:
            converged = True
            break
    return p, cost, converged, J


def _prepare(x, y, sigma, min_points):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise FitError("x and y must be 1-D arrays of equal length")
    if len(x) < min_points:
        raise FitError(f"need at least {min_points} points, got {len(x)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("data must be finite")
    if np.ptp(y) == 0:
        raise FitError("degenerate data: all y values are equal")
    if sigma is None:
        w = np.ones_like(y)
    else:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != y.shape or not np.all(sigma > 0) or not np.all(np.isfinite(sigma)):
            raise FitError("sigma must be finite and positive for every point")
        w = 1.0 / sigma
    return x, y, w


def _covariance(J, cost, n, n_free, absolute):
    # J here is the weighted Jacobian in scaled units
    try:
        cov = np.linalg.pinv(J.T @ J)
    except np.linalg.LinAlgError:
        return np.full((J.shape[1], J.shape[1]), np.inf)
    if not absolute:
        dof = n - n_free
        cov = cov * (2.0 * cost / dof if dof > 0 else np.inf)
    return cov


def _solve(names, scale, build, starts, n, absolute):
    best = None
    start_costs = []
    for s in starts:
        p, cost, ok, J = levenberg_marquardt(build, s)
        r0, _ = build(np.asarray(s, dtype=float))
        start_costs.append(0.5 * float(r0 @ r0))
        if best is None or cost < best[1]:
            best = (p, cost, ok, J)
    p, cost, ok, J = best
    # polish the winner on the step size so results are exact to rounding
    p, cost, polished, J = levenberg_marquardt(build, p, ftol=0.0)
    ok = ok or polished
    cov = _covariance(J, cost, n, len(p), absolute)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    params = {k: float(v * sc) for k, v, sc in zip(names, p, scale)}
    errors = {k: float(e * abs(sc)) for k, e, sc in zip(names, err, scale)}
    return params, errors, cost, ok, start_costs


def _residual_norm(cost, y_scale, weighted):
    # chi for weighted fits, plain residual norm in y units otherwise
    return float(np.sqrt(2 * cost)) * (1.0 if weighted else y_scale)


def lorentzian(f, f0, width, amplitude, offset):
    """``A (G/2)^2 / ((f - f0)^2 + (G/2)^2) + C``."""
    h = 0.5 * width
    return amplitude * h * h / ((np.asarray(f) - f0) ** 2 + h * h) + offset


def exponential(t, amplitude, lifetime, offset):
    """``A exp(-t / tau) + C``."""
    return amplitude * np.exp(-np.asarray(t) / lifetime) + offset


def fit_lorentzian(f, y, sigma=None, offset=None):
    """Fit a Lorentzian peak or dip; ``offset`` fixes C instead of floating it.

    Starts place the center at the data maximum and minimum with widths of
    1/20, 1/6 and 1/2 of the frequency span.
    """
    f, y, w = _prepare(f, y, sigma, 5)
    f_mid = 0.5 * (f.min() + f.max())
    f_span = max(np.ptp(f), 1e-300)
    y_scale = float(np.max(np.abs(y)))
    u = (f - f_mid) / f_span
    v = y / y_scale
    if sigma is not None:
        w = w * y_scale  # weighted residuals in original units: chi per point
    fix_c = offset is not None
    c_fixed = (offset / y_scale) if fix_c else 0.0

    def build(p):
        u0, gam, A = p[0], p[1], p[2]
        C = c_fixed if fix_c else p[3]
        h = 0.5 * gam
        du = u - u0
        D = du * du + h * h
        L = h * h / D
        model = A * L + C
        r = w * (model - v)
        cols = [A * h * h * 2 * du / (D * D), A * h * du * du / (D * D), L]
        if not fix_c:
            cols.append(np.ones_like(u))
        return r, w[:, None] * np.column_stack(cols)

    base = np.median(v) if not fix_c else c_fixed
    starts = []
    for i in (int(np.argmax(v)), int(np.argmin(v))):
        for frac in (0.05, 1.0 / 6.0, 0.5):
            s = [u[i], frac, v[i] - base]
            if not fix_c:
                s.append(base)
            starts.append(s)
    names = ["center", "width", "amplitude"] + ([] if fix_c else ["offset"])
    scale = [f_span, f_span, y_scale] + ([] if fix_c else [y_scale])
    params, errors, cost, ok, start_costs = _solve(names, scale, build, starts, len(f),
                                                   sigma is not None)
    params["center"] = float(params["center"] + f_mid)
    params["width"] = abs(params["width"])
    if fix_c:
        params["offset"] = float(offset)
        errors["offset"] = 0.0
    ok = ok and params["width"] > 0
    return FitResult("lorentzian", params, errors, _residual_norm(cost, y_scale, sigma is not None), ok, len(f),
                     ("offset",) if fix_c else (), start_costs)


def fit_exponential(t, y, sigma=None, offset=None):
    """Fit ``A exp(-t / tau) + C``; ``offset`` fixes C instead of floating it.

    Starts use lifetimes of 0.1, 0.3, 1 and 3 times the time span.
    """
    t, y, w = _prepare(t, y, sigma, 4)
    t0 = float(t.min())
    t_span = max(np.ptp(t), 1e-300)
    y_scale = float(np.max(np.abs(y)))
    u = (t - t0) / t_span
    v = y / y_scale
    if sigma is not None:
        w = w * y_scale  # weighted residuals in original units: chi per point
    fix_c = offset is not None
    c_fixed = (offset / y_scale) if fix_c else 0.0

    def build(p):
        A, tau = p[0], p[1]
        C = c_fixed if fix_c else p[2]
        e = np.exp(-u / tau)
        r = w * (A * e + C - v)
        cols = [e, A * e * u / (tau * tau)]
        if not fix_c:
            cols.append(np.ones_like(u))
        return r, w[:, None] * np.column_stack(cols)

    late = v[np.argmax(u)]
    early = v[np.argmin(u)]
    starts = []
    for frac in (0.1, 0.3, 1.0, 3.0):
        if fix_c:
            starts.append([early - c_fixed, frac])
        else:
            starts.append([early - late, frac, late])
    names = ["amplitude", "lifetime"] + ([] if fix_c else ["offset"])
    scale = [y_scale, t_span] + ([] if fix_c else [y_scale])
    params, errors, cost, ok, start_costs = _solve(names, scale, build, starts, len(t),
                                                   sigma is not None)
    # amplitude was fitted at t0; refer it back to t = 0
    shift = float(np.exp(t0 / params["lifetime"]))
    params["amplitude"] *= shift
    errors["amplitude"] *= shift
    if fix_c:
        params["offset"] = float(offset)
        errors["offset"] = 0.0
    ok = ok and params["lifetime"] > 0
    return FitResult("exponential", params, errors, _residual_norm(cost, y_scale, sigma is not None), ok, len(t),
                     ("offset",) if fix_c else (), start_costs)
