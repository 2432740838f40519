"""Static field of a uniformly magnetized rectangular prism.

The prism is modelled with magnetic surface charges ``+M`` and ``-M`` on the two
faces normal to the magnetization.  Each face is a uniformly charged rectangle
whose field has closed-form arctan/log antiderivatives, so field and gradient
are evaluated exactly without quadrature.

Body frame: half-lengths ``(a, b, c)`` along body ``x, y, z``; magnetization
along body ``+z``.  ``Magnet.orientation`` rotates body vectors into the lab.
"""

from dataclasses import dataclass, field
import math

import numba
import numpy as np

from .constants import CONSTANTS

# paper tip magnet: 85 um along the moment, 60 um wide, 9 um thick
TIP_MAGNET_DIMS = (60e-6, 9e-6, 85e-6)
TIP_MAGNET_MOMENT = 2e-9  # J/T
TIP_MAGNETIZATION = TIP_MAGNET_MOMENT / (TIP_MAGNET_DIMS[0] * TIP_MAGNET_DIMS[1] * TIP_MAGNET_DIMS[2])


class InsideMagnetError(ValueError):
    """Raised when a field is requested strictly inside the magnet body."""


@dataclass(frozen=True)
class Magnet:
    half_lengths: tuple
    magnetization: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        half = tuple(float(h) for h in self.half_lengths)
        if len(half) != 3 or min(half) <= 0:
            raise ValueError(f"half_lengths must be three positive lengths, got {self.half_lengths!r}")
        if not self.magnetization >= 0:
            raise ValueError(f"magnetization must be >= 0, got {self.magnetization!r}")
        rot = np.asarray(self.orientation, dtype=float)
        if rot.shape != (3, 3) or not np.allclose(rot @ rot.T, np.eye(3), atol=1e-12):
            raise ValueError("orientation must be a 3x3 rotation matrix")
        center = np.asarray(self.center, dtype=float)
        if center.shape != (3,) or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite 3-vector")
        object.__setattr__(self, "half_lengths", half)
        object.__setattr__(self, "orientation", rot)
        object.__setattr__(self, "center", center)

    @classmethod
    def from_dimensions(cls, dims, magnetization=None, moment=None, **kwargs):
        """Build from full edge lengths ``(x, y, z)``, moment along ``z``."""
        dims = tuple(float(d) for d in dims)
        volume = dims[0] * dims[1] * dims[2]
        if magnetization is None:
            magnetization = TIP_MAGNETIZATION if moment is None else moment / volume
        return cls(tuple(d / 2 for d in dims), magnetization, **kwargs)

    @property
    def volume(self):
        a, b, c = self.half_lengths
        return 8.0 * a * b * c

    @property
    def total_moment(self):
        return self.magnetization * self.volume

    @property
    def axis(self):
        """Lab-frame unit vector of the magnetization."""
        return self.orientation[:, 2].copy()

    @property
    def moment_vector(self):
        return self.total_moment * self.axis

    def face_point(self):
        """Center of the face the moment points out of (the tip face)."""
        return self.center + self.half_lengths[2] * self.axis

    def contains(self, p):
        """True for points strictly inside the body."""
        q = self.to_body(p)
        a, b, c = self.half_lengths
        return (np.abs(q[..., 0]) < a) & (np.abs(q[..., 1]) < b) & (np.abs(q[..., 2]) < c)

    def to_body(self, p):
        return (np.asarray(p, dtype=float) - self.center) @ self.orientation


def paper_tip_magnet(**kwargs):
    """The 85 x 60 x 9 um CoNiMnP tip magnet with a 2e-9 J/T moment."""
    return Magnet.from_dimensions(TIP_MAGNET_DIMS, moment=TIP_MAGNET_MOMENT, **kwargs)


@numba.njit(cache=True, inline="always")
def _log_plus(u, r, rest2):
    # ln(u + r) with r = sqrt(u^2 + rest2), stable for u << 0
    if u >= 0:
        return math.log(u + r)
    return math.log(rest2 / (r - u))


@numba.njit(cache=True, inline="always")
def _inv_plus(u, r, rest2):
    if u >= 0:
        return 1.0 / (u + r)
    return (r - u) / rest2


@numba.njit(cache=True)
def prism_body_field(x, y, z, a, b, c, sigma, H, G, with_gradient):
    """Accumulate H (A/m, no mu0) and dH_i/dq_j into ``H`` (3,) and ``G`` (3, 3).

    Body-frame point ``(x, y, z)``; charges ``+sigma`` on ``z = c`` and
    ``-sigma`` on ``z = -c``.
    """
    for i in range(3):
        H[i] = 0.0
        if with_gradient:
            for j in range(3):
                G[i, j] = 0.0
    pref = sigma / (4.0 * math.pi)
    for iz in range(2):
        z0 = c if iz == 0 else -c
        face_sign = 1.0 if iz == 0 else -1.0
        Z = z - z0
        Z2 = Z * Z
        for ix in range(2):
            X = x - (a if ix == 0 else -a)
            sx = 1.0 if ix == 0 else -1.0
            X2 = X * X
            for iy in range(2):
                Y = y - (b if iy == 0 else -b)
                sy = 1.0 if iy == 0 else -1.0
                Y2 = Y * Y
                s = face_sign * sx * sy * pref
                R = math.sqrt(X2 + Y2 + Z2)
                XZ2 = X2 + Z2
                YZ2 = Y2 + Z2
                H[0] -= s * _log_plus(Y, R, XZ2)
                H[1] -= s * _log_plus(X, R, YZ2)
                num = X * Y
                den = Z * R
                if den != 0.0:
                    H[2] += s * math.atan(num / den)
                elif num != 0.0:
                    # in the face plane beside the plate; corner terms cancel pairwise
                    H[2] += s * math.copysign(0.5 * math.pi, num) * (1.0 if Z >= 0.0 else -1.0)
                if with_gradient:
                    iy_ = _inv_plus(Y, R, XZ2)
                    ix_ = _inv_plus(X, R, YZ2)
                    G[0, 0] -= s * X * iy_ / R
                    G[0, 1] -= s / R
                    G[0, 2] -= s * Z * iy_ / R
                    G[1, 0] -= s / R
                    G[1, 1] -= s * Y * ix_ / R
                    G[1, 2] -= s * Z * ix_ / R
                    G[2, 0] += s * Y * Z / (R * XZ2)
                    G[2, 1] += s * X * Z / (R * YZ2)
                    G[2, 2] -= s * X * Y * (R * R + Z2) / (R * XZ2 * YZ2)


@numba.njit(cache=True)
def _body_field_many(q, a, b, c, sigma, with_gradient):
    n = q.shape[0]
    Hs = np.empty((n, 3))
    Gs = np.zeros((n, 3, 3))
    H = np.empty(3)
    G = np.empty((3, 3))
    for k in range(n):
        prism_body_field(q[k, 0], q[k, 1], q[k, 2], a, b, c, sigma, H, G, with_gradient)
        Hs[k] = H
        if with_gradient:
            Gs[k] = G
    return Hs, Gs


def _body_field(q, half, sigma, with_gradient):
    a, b, c = half
    return _body_field_many(np.ascontiguousarray(q), a, b, c, float(sigma), with_gradient)


def _prepare(magnet, p):
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    pts = np.atleast_2d(p)
    if pts.shape[-1] != 3 or not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite with 3 components")
    if np.any(magnet.contains(pts)):
        raise InsideMagnetError("field requested inside the magnet body")
    return pts, single


def field_at(magnet, p, constants=CONSTANTS):
    """Flux density (T) of ``magnet`` at lab point(s) ``p`` of shape (3,) or (N, 3).

    Points on a face evaluate the exterior one-sided limit; edges and corners
    are logarithmically singular and should be avoided.
    """
    pts, single = _prepare(magnet, p)
    q = magnet.to_body(pts)
    H, _ = _body_field(q, magnet.half_lengths, magnet.magnetization, False)
    B = constants.mu0 * H @ magnet.orientation.T
    return B[0] if single else B


def gradient_at(magnet, p, constants=CONSTANTS):
    """Gradient tensor ``G[i, j] = dB_i/dx_j`` (T/m) and ``grad|B|`` (T/m).

    Returns ``(G, grad_abs)`` with shapes (3, 3)/(3,) or (N, 3, 3)/(N, 3).
    """
    pts, single = _prepare(magnet, p)
    q = magnet.to_body(pts)
    H, Gb = _body_field(q, magnet.half_lengths, magnet.magnetization, True)
    R = magnet.orientation
    B = constants.mu0 * H @ R.T
    G = constants.mu0 * np.einsum("ia,nab,jb->nij", R, Gb, R)
    grad_abs = grad_of_magnitude(B, G)
    if single:
        return G[0], grad_abs[0]
    return G, grad_abs


def grad_of_magnitude(B, G):
    """``grad|B|`` from field(s) ``B`` and gradient tensor(s) ``G``; zero where B = 0."""
    B = np.asarray(B, dtype=float)
    G = np.asarray(G, dtype=float)
    norm = np.linalg.norm(B, axis=-1, keepdims=True)
    unit = np.divide(B, norm, out=np.zeros_like(B), where=norm > 0)
    return np.einsum("...i,...ij->...j", unit, G)


def dipole_field(moment, p_rel, constants=CONSTANTS):
    """Point-dipole field (T); a scalar ``moment`` points along +z."""
    m = np.asarray(moment, dtype=float)
    if m.ndim == 0:
        m = np.array([0.0, 0.0, float(m)])
    r = np.asarray(p_rel, dtype=float)
    dist = np.linalg.norm(r, axis=-1, keepdims=True)
    if np.any(dist == 0):
        raise ValueError("dipole field is singular at zero distance")
    rhat = r / dist
    mdotr = np.sum(rhat * m, axis=-1, keepdims=True)
    return constants.mu0 / (4 * np.pi) * (3 * rhat * mdotr - m) / dist**3


class FieldTable:
    """Regular-grid field lookup with trilinear interpolation.

    ``bounds`` is ``((x0, x1), (y0, y1), (z0, z1))``; grid nodes inside the
    magnet are filled with NaN and poison any interpolation that touches them.
    """

    def __init__(self, magnet, bounds, shape, constants=CONSTANTS):
        self.magnet = magnet
        self.axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(bounds, shape)]
        grid = np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1).reshape(-1, 3)
        values = np.full((grid.shape[0], 3), np.nan)
        outside = ~magnet.contains(grid)
        values[outside] = field_at(magnet, grid[outside], constants)
        self.values = values.reshape(tuple(shape) + (3,))

    def __call__(self, p):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        idx = []
        frac = []
        for d, ax in enumerate(self.axes):
            step = ax[1] - ax[0]
            t = (p[:, d] - ax[0]) / step
            if np.any(t < 0) or np.any(t > len(ax) - 1):
                raise ValueError("point outside field table bounds")
            i = np.minimum(np.floor(t).astype(int), len(ax) - 2)
            idx.append(i)
            frac.append(t - i)
        out = np.zeros((p.shape[0], 3))
        for dx in (0, 1):
            wx = frac[0] if dx else 1 - frac[0]
            for dy in (0, 1):
                wy = frac[1] if dy else 1 - frac[1]
                for dz in (0, 1):
                    wz = frac[2] if dz else 1 - frac[2]
                    out += (wx * wy * wz)[:, None] * self.values[idx[0] + dx, idx[1] + dy, idx[2] + dz]
        return out
