"""Composite tip + external-field trap: Zeeman potentials, Larmor map, slices.

The external field is a uniform bias plus an optional linear quadrupole
``G * [(n.d) n - (d - (n.d) n) / 2]`` about ``quad_center`` along the trap axis
``n``.  With ``quad_gradient = 0`` the external field is the bias alone.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .constants import CONSTANTS
from .magnetostatics import field_at, gradient_at, grad_of_magnitude

M_F_LEVELS = (-2, -1, 0, 1, 2)


class NoMinimumError(RuntimeError):
    """The search region holds no strict local minimum of |B|."""


@dataclass(frozen=True)
class TrapConfig:
    magnet: object = None
    bias_field: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quad_gradient: float = 0.0  # T/m along the axis
    quad_center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    axis: np.ndarray = None
    g_F: float = 0.5
    F: int = 2
    field_floor: float = 1e-6  # T, minimum allowed |B| at the trap bottom
    constants: object = CONSTANTS

    def __post_init__(self):
        bias = np.asarray(self.bias_field, dtype=float)
        if bias.shape != (3,) or not np.all(np.isfinite(bias)):
            raise ValueError("bias_field must be a finite 3-vector")
        object.__setattr__(self, "bias_field", bias)
        object.__setattr__(self, "quad_center", np.asarray(self.quad_center, dtype=float))
        if self.axis is None:
            axis = self.magnet.axis if self.magnet is not None else np.array([0.0, 0.0, 1.0])
        else:
            axis = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", axis / np.linalg.norm(axis))
        if self.F != 2:
            raise ValueError("only the F = 2 manifold is modelled")

    @property
    def origin(self):
        """Anchor of the axial coordinate: the magnet center (or the lab origin)."""
        return self.magnet.center if self.magnet is not None else np.zeros(3)

    def axis_point(self, s):
        """Lab point(s) at axial coordinate(s) ``s`` from the origin."""
        s = np.asarray(s, dtype=float)
        return self.origin + s[..., None] * self.axis

    def quad_tensor(self):
        n = self.axis
        return self.quad_gradient * (1.5 * np.outer(n, n) - 0.5 * np.eye(3))


def external_field(t, p):
    d = np.asarray(p, dtype=float) - t.quad_center
    return t.bias_field + d @ t.quad_tensor().T


def total_field(t, p):
    """Tip field plus external field (T)."""
    ext = external_field(t, p)
    if t.magnet is None:
        return ext
    return field_at(t.magnet, p, t.constants) + ext


def total_gradient(t, p):
    """``(G, grad|B|)`` of the total field."""
    p = np.asarray(p, dtype=float)
    Q = t.quad_tensor()
    if t.magnet is None:
        G = np.broadcast_to(Q, p.shape[:-1] + (3, 3)).copy()
    else:
        G, _ = gradient_at(t.magnet, p, t.constants)
        G = G + Q
    return G, grad_of_magnitude(total_field(t, p), G)


def field_magnitude(t, p):
    return np.linalg.norm(total_field(t, p), axis=-1)


def larmor_frequency(t, p):
    """Larmor frequency gamma |B| in Hz."""
    return t.constants.gamma_Rb * field_magnitude(t, p)


def zeeman_potential(t, p, m_F):
    """Adiabatic Zeeman energy ``m_F g_F mu_B |B|`` (J)."""
    if int(m_F) != m_F or int(m_F) not in M_F_LEVELS:
        raise ValueError(f"m_F must be an integer in -2..2, got {m_F!r}")
    return int(m_F) * t.g_F * t.constants.mu_B * field_magnitude(t, p)


def solve_bias(magnet, standoff, reference="face", quad_gradient=0.0, field_floor=1e-6, **kwargs):
    """Trap whose |B| minimum sits ``standoff`` from the tip face (or magnet center).

    The bias cancels the tip and quadrupole fields at the target point except
    for a transverse ``field_floor`` that keeps |B| away from zero.  The sign of
    ``quad_gradient`` is chosen so it steepens the tip gradient at the target.
    """
    if reference not in ("face", "center"):
        raise ValueError("standoff reference must be 'face' or 'center'")
    offset = standoff + (magnet.half_lengths[2] if reference == "face" else 0.0)
    axis = magnet.axis
    target = magnet.center + offset * axis
    G_tip, _ = gradient_at(magnet, target)
    tip_slope = axis @ G_tip @ axis
    quad = np.sign(tip_slope) * abs(quad_gradient) if tip_slope != 0 else quad_gradient
    transverse = magnet.orientation[:, 0]
    bias = -field_at(magnet, target) + field_floor * transverse
    return TrapConfig(magnet=magnet, bias_field=bias, quad_gradient=quad, quad_center=target,
                      field_floor=field_floor, **kwargs), target


def _hessian_abs(t, p, h):
    H = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        _, gp = total_gradient(t, p + e)
        _, gm = total_gradient(t, p - e)
        H[:, j] = (gp - gm) / (2 * h)
    return 0.5 * (H + H.T)


def find_trap_minimum(t, region, n_starts=5, tol=1e-6):
    """Local minimizer of |B| inside the box ``region = (lo, hi)``.

    Multi-start L-BFGS-B on |B|^2 (smooth even at a field zero), then Newton
    polishing of grad|B| = 0.  Returns ``(point, |B|_min)``.
    """
    lo = np.asarray(region[0], dtype=float)
    hi = np.asarray(region[1], dtype=float)
    scale = np.maximum(hi - lo, 1e-12)
    ref_B = max(np.max(field_magnitude(t, np.array([lo, hi, 0.5 * (lo + hi)]))), 1e-12)

    def fun(u):
        p = lo + u * scale
        B = total_field(t, p)
        G, _ = total_gradient(t, p)
        val = B @ B / ref_B**2
        grad = 2 * (B @ G) * scale / ref_B**2
        return val, grad

    starts = [np.full(3, 0.5)]
    for k in range(1, n_starts):
        frac = (k + 0.5) / n_starts
        starts.append(np.array([0.5, 0.5, frac]) if k % 2 else np.array([frac, 0.5, 0.5]))
    best = None
    for u0 in starts:
        res = optimize.minimize(fun, u0, jac=True, method="L-BFGS-B", bounds=[(0, 1)] * 3,
                                options={"ftol": 1e-15, "gtol": 1e-14, "maxiter": 2000})
        if best is None or res.fun < best.fun:
            best = res
    p = lo + best.x * scale
    if np.any(best.x <= 1e-9) or np.any(best.x >= 1 - 1e-9):
        raise NoMinimumError("|B| decreases toward the region boundary; no interior minimum")
    step = 1e-3 * float(np.min(scale))
    for _ in range(50):
        Bmag = float(np.linalg.norm(total_field(t, p)))
        if Bmag < 1e-13:
            return p, Bmag
        _, g = total_gradient(t, p)
        if np.linalg.norm(g) <= tol:
            break
        H = _hessian_abs(t, p, step)
        try:
            dp = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        p = p + dp
        step = max(min(step, 10 * np.linalg.norm(dp)), 1e-14)
    _, g = total_gradient(t, p)
    H = _hessian_abs(t, p, max(step, 1e-12))
    eig = np.linalg.eigvalsh(H)
    if np.linalg.norm(g) > tol or eig.min() <= 1e-9 * max(abs(eig).max(), 1e-30) or eig.max() <= 0:
        raise NoMinimumError("no strict local minimum of |B| in region")
    if np.any(p < lo) or np.any(p > hi):
        raise NoMinimumError("minimum left the search region")
    return p, float(np.linalg.norm(total_field(t, p)))


@dataclass
class ResonantSlice:
    target_B: float
    points: np.ndarray  # (n, 3) lab positions with gamma |B| = f
    coords: np.ndarray = None  # axial / line parameters in 1-D mode

    def __len__(self):
        return len(self.points)


def resonant_field(t, f_drive):
    return f_drive / t.constants.gamma_Rb


def resonant_slice(t, f_drive, start=None, stop=None, n=2001, grid=None, rtol=1e-9):
    """Points where gamma |B| equals ``f_drive``.

    Line mode scans the segment ``start -> stop`` (axial coordinates along the
    trap axis when scalars are given) and returns the crossings ordered along
    it.  Grid mode takes ``grid = (xs, ys, zs)`` and refines every grid edge
    with a sign change.  An empty slice is returned when nothing crosses.
    """
    if not f_drive > 0:
        raise ValueError("drive frequency must be positive")
    target = resonant_field(t, f_drive)

    def resid(p):
        return field_magnitude(t, p) - target

    if grid is not None:
        xs, ys, zs = (np.asarray(g, dtype=float) for g in grid)
        P = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1)
        inside = np.zeros(P.shape[:3], dtype=bool) if t.magnet is None else t.magnet.contains(P)
        vals = np.full(P.shape[:3], np.nan)
        vals[~inside] = resid(P[~inside])
        pts = []
        for ax in range(3):
            a = [slice(None)] * 3
            b = [slice(None)] * 3
            a[ax] = slice(None, -1)
            b[ax] = slice(1, None)
            va, vb = vals[tuple(a)], vals[tuple(b)]
            hits = np.argwhere(np.isfinite(va) & np.isfinite(vb) & (np.sign(va) != np.sign(vb)))
            for idx in hits:
                p0 = P[tuple(a)][tuple(idx)]
                p1 = P[tuple(b)][tuple(idx)]
                lam = optimize.brentq(lambda s: resid(p0 + s * (p1 - p0)), 0.0, 1.0, xtol=1e-15, rtol=rtol)
                pts.append(p0 + lam * (p1 - p0))
        return ResonantSlice(target, np.array(pts).reshape(-1, 3))

    if np.ndim(start) == 0:
        p0, p1 = t.axis_point(float(start)), t.axis_point(float(stop))
        param0, param1 = float(start), float(stop)
    else:
        p0, p1 = np.asarray(start, dtype=float), np.asarray(stop, dtype=float)
        param0, param1 = 0.0, float(np.linalg.norm(p1 - p0))
    lam = np.linspace(0.0, 1.0, n)
    line = p0 + lam[:, None] * (p1 - p0)
    vals = resid(line)
    crossings = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    exact = np.nonzero(vals == 0)[0]
    lams = [lam[i] for i in exact]
    for i in crossings:
        lams.append(optimize.brentq(lambda s: resid(p0 + s * (p1 - p0)), lam[i], lam[i + 1],
                                    xtol=1e-15, rtol=rtol))
    lams = np.sort(np.array(lams, dtype=float))
    return ResonantSlice(target, p0 + lams[:, None] * (p1 - p0), param0 + lams * (param1 - param0))
