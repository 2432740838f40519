"""Thermal-ensemble trap-loss simulation along the trap axis.

Atoms move along the magnet axis in the adiabatic potential
``m_F g_F mu_B |B(s)|`` (``s`` measured from the magnet center).  Every
passage through the resonant slice is located by bisection and resolved
with a Landau-Zener draw from the atom's own counter-based stream.  Each atom
reduces to a single loss time, so the trapped fraction is a count over
atoms and does not depend on how atoms are spread over threads.
"""

from dataclasses import dataclass, field
import math

import numba
import numpy as np
from scipy import optimize

from .magnetostatics import gradient_at, prism_body_field
from .rng import stream_normal_pair, stream_uniform
from .trap import field_magnitude, total_gradient

V_EPSILON = 1e-12  # m/s, slower crossings count as fully adiabatic
BISECT_TOL = 1e-10  # m, slice-position tolerance of the crossing bisection
LANES = 8  # atoms advanced together per worker


class SamplingError(RuntimeError):
    """The thermal distribution cannot be confined in the simulated region."""


class InstabilityError(RuntimeError):
    """Energy drift in an undriven run exceeded the allowed bound."""


# ---------------------------------------------------------------------------
# axial field model


@numba.njit(cache=True, inline="always")
def _hermite(s, s0, h, Bn, Dn):
    x = (s - s0) / h
    i = int(x)
    if i < 0:
        i = 0
    elif i > Bn.shape[0] - 2:
        i = Bn.shape[0] - 2
    t = x - i
    t2 = t * t
    t3 = t2 * t
    f0 = Bn[i]
    f1 = Bn[i + 1]
    d0 = Dn[i] * h
    d1 = Dn[i + 1] * h
    val = (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * d1
    der = ((6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * d0 + (-6 * t2 + 6 * t) * f1 + (3 * t2 - 2 * t) * d1) / h
    return val, der


@numba.njit(cache=True)
def _axial_exact(s, ex):
    # ex: origin(3) axis(3) center(3) rot(9) half(3) sigma mu0 bias(3) quad(9) qc(3) has_magnet
    px = ex[0] + s * ex[3]
    py = ex[1] + s * ex[4]
    pz = ex[2] + s * ex[5]
    Bx = ex[28] + ex[31] * (px - ex[40]) + ex[32] * (py - ex[41]) + ex[33] * (pz - ex[42])
    By = ex[29] + ex[34] * (px - ex[40]) + ex[35] * (py - ex[41]) + ex[36] * (pz - ex[42])
    Bz = ex[30] + ex[37] * (px - ex[40]) + ex[38] * (py - ex[41]) + ex[39] * (pz - ex[42])
    # directional derivative of B along the axis
    dBx = ex[31] * ex[3] + ex[32] * ex[4] + ex[33] * ex[5]
    dBy = ex[34] * ex[3] + ex[35] * ex[4] + ex[36] * ex[5]
    dBz = ex[37] * ex[3] + ex[38] * ex[4] + ex[39] * ex[5]
    if ex[43] > 0:
        dx = px - ex[6]
        dy = py - ex[7]
        dz = pz - ex[8]
        # body coordinates q = R^T d, rot stored row-major
        qx = ex[9] * dx + ex[12] * dy + ex[15] * dz
        qy = ex[10] * dx + ex[13] * dy + ex[16] * dz
        qz = ex[11] * dx + ex[14] * dy + ex[17] * dz
        H = np.empty(3)
        G = np.empty((3, 3))
        prism_body_field(qx, qy, qz, ex[18], ex[19], ex[20], ex[21], H, G, True)
        # body-frame axis n_b = R^T n
        nbx = ex[9] * ex[3] + ex[12] * ex[4] + ex[15] * ex[5]
        nby = ex[10] * ex[3] + ex[13] * ex[4] + ex[16] * ex[5]
        nbz = ex[11] * ex[3] + ex[14] * ex[4] + ex[17] * ex[5]
        dHx = G[0, 0] * nbx + G[0, 1] * nby + G[0, 2] * nbz
        dHy = G[1, 0] * nbx + G[1, 1] * nby + G[1, 2] * nbz
        dHz = G[2, 0] * nbx + G[2, 1] * nby + G[2, 2] * nbz
        mu0 = ex[22]
        Bx += mu0 * (ex[9] * H[0] + ex[10] * H[1] + ex[11] * H[2])
        By += mu0 * (ex[12] * H[0] + ex[13] * H[1] + ex[14] * H[2])
        Bz += mu0 * (ex[15] * H[0] + ex[16] * H[1] + ex[17] * H[2])
        dBx += mu0 * (ex[9] * dHx + ex[10] * dHy + ex[11] * dHz)
        dBy += mu0 * (ex[12] * dHx + ex[13] * dHy + ex[14] * dHz)
        dBz += mu0 * (ex[15] * dHx + ex[16] * dHy + ex[17] * dHz)
    mag = math.sqrt(Bx * Bx + By * By + Bz * Bz)
    if mag == 0.0:
        return 0.0, 0.0
    return mag, (Bx * dBx + By * dBy + Bz * dBz) / mag


@numba.njit(cache=True)
def _tip_gradient_exact(s, ex):
    # |n . grad B_tip . n|: the tip's own field gradient along the axis
    if ex[43] == 0:
        return 0.0
    dx = ex[0] + s * ex[3] - ex[6]
    dy = ex[1] + s * ex[4] - ex[7]
    dz = ex[2] + s * ex[5] - ex[8]
    qx = ex[9] * dx + ex[12] * dy + ex[15] * dz
    qy = ex[10] * dx + ex[13] * dy + ex[16] * dz
    qz = ex[11] * dx + ex[14] * dy + ex[17] * dz
    H = np.empty(3)
    G = np.empty((3, 3))
    prism_body_field(qx, qy, qz, ex[18], ex[19], ex[20], ex[21], H, G, True)
    nbx = ex[9] * ex[3] + ex[12] * ex[4] + ex[15] * ex[5]
    nby = ex[10] * ex[3] + ex[13] * ex[4] + ex[16] * ex[5]
    nbz = ex[11] * ex[3] + ex[14] * ex[4] + ex[17] * ex[5]
    acc = 0.0
    for i in range(3):
        ni = nbx if i == 0 else (nby if i == 1 else nbz)
        acc += ni * (G[i, 0] * nbx + G[i, 1] * nby + G[i, 2] * nbz)
    return abs(ex[22] * acc)


@numba.njit(cache=True, inline="always")
def _linear(s, s0, h, Cn):
    x = (s - s0) / h
    i = int(x)
    if i < 0:
        i = 0
    elif i > Cn.shape[0] - 2:
        i = Cn.shape[0] - 2
    t = x - i
    return Cn[i] * (1.0 - t) + Cn[i + 1] * t


@numba.njit(cache=True)
def _coupling_gradient(s, exact, s0, h, Cn, ex, local_gradient, tip_coupling):
    if not tip_coupling:
        return abs(local_gradient)
    if exact:
        return _tip_gradient_exact(s, ex)
    return _linear(s, s0, h, Cn)


@numba.njit(cache=True, inline="always")
def _axial(s, exact, s0, h, Bn, Dn, ex):
    if exact:
        return _axial_exact(s, ex)
    return _hermite(s, s0, h, Bn, Dn)


class AxialModel:
    """|B| and d|B|/ds along the trap axis, tabulated for cubic Hermite lookup.

    The table spans ``[s_surface, s_far]`` with node spacing ``step``; with
    ``exact=True`` the kernels evaluate the analytic prism field instead.
    Hermite interpolation keeps the force continuous, which the symplectic
    integrator needs for energy conservation.
    """

    def __init__(self, trap, s_far, step=2e-8, exact=False, s_surface=None):
        self.trap = trap
        self.exact = bool(exact)
        if s_surface is None:
            s_surface = trap.magnet.half_lengths[2] if trap.magnet is not None else -np.inf
        self.s_surface = float(s_surface)
        self.s_far = float(s_far)
        lo = self.s_surface if np.isfinite(self.s_surface) else -self.s_far
        n = int(math.ceil((self.s_far - lo) / step)) + 1
        self.s0 = lo
        self.step = (self.s_far - lo) / (n - 1)
        nodes = lo + self.step * np.arange(n)
        self.nodes = nodes
        pts = trap.axis_point(nodes)
        B = field_magnitude(trap, pts)
        _, grad = total_gradient(trap, pts)
        self.B = np.ascontiguousarray(B)
        self.D = np.ascontiguousarray(grad @ trap.axis)
        # gradient of the tip field alone, which sets the spin-flip coupling
        if trap.magnet is not None:
            G_tip, _ = gradient_at(trap.magnet, pts, trap.constants)
            self.C = np.ascontiguousarray(np.abs(np.einsum("i,nij,j->n", trap.axis, G_tip, trap.axis)))
        else:
            self.C = np.zeros_like(self.B)
        self.ex = self._exact_params()

    def _exact_params(self):
        t = self.trap
        ex = np.zeros(44)
        ex[0:3] = t.origin
        ex[3:6] = t.axis
        if t.magnet is not None:
            m = t.magnet
            ex[6:9] = m.center
            ex[9:18] = m.orientation.reshape(-1)
            ex[18:21] = m.half_lengths
            ex[21] = m.magnetization
            ex[43] = 1.0
        ex[22] = t.constants.mu0
        ex[28:31] = t.bias_field
        ex[31:40] = t.quad_tensor().reshape(-1)
        ex[40:43] = t.quad_center
        return ex

    def __call__(self, s):
        """(|B|, d|B|/ds) at axial coordinate(s) ``s`` using the active evaluator."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.array([_axial(x, self.exact, self.s0, self.step, self.B, self.D, self.ex) for x in s])
        return out[:, 0], out[:, 1]

    def minimum(self):
        """Axial coordinate and value of the |B| minimum."""
        i = int(np.argmin(self.B))
        lo = self.nodes[max(i - 2, 0)]
        hi = self.nodes[min(i + 2, len(self.nodes) - 1)]
        res = optimize.minimize_scalar(lambda s: self(s)[0][0], bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-13})
        return float(res.x), float(res.fun)

    def potential(self, s, m_F=2):
        B, _ = self(s)
        return m_F * self.trap.g_F * self.trap.constants.mu_B * B


def build_axial_model(trap, temperature, step=2e-8, exact=False, energy_cap=20.0, s_limit=0.05):
    """Axial model whose far edge confines atoms up to ``energy_cap`` k_B T in m_F = 1.

    Raises :class:`SamplingError` when |B| never reaches the required height
    within ``s_limit`` of the magnet (an unbounded potential).
    """
    c = trap.constants
    s_surface = trap.magnet.half_lengths[2] if trap.magnet is not None else 0.0
    kT = c.k_B * max(temperature, 1e-9)
    # m_F = 1 sees half the potential of m_F = 2
    B_need = energy_cap * kT / (trap.g_F * c.mu_B)
    s_grid = s_surface + np.geomspace(1e-6, s_limit, 4000)
    B = field_magnitude(trap, trap.axis_point(s_grid))
    i_min = int(np.argmin(B))
    beyond = np.nonzero(B[i_min:] >= B_need)[0]
    if len(beyond) == 0:
        raise SamplingError(
            f"|B| stays below {B_need:.3g} T beyond the trap minimum: potential too shallow to confine "
            f"a {temperature:.3g} K ensemble")
    s_far = s_grid[i_min + beyond[0]]
    return AxialModel(trap, s_far, step=step, exact=exact, s_surface=s_surface)


# ---------------------------------------------------------------------------
# ensemble


@dataclass
class EnsembleState:
    position: np.ndarray  # axial coordinate (m)
    velocity: np.ndarray  # m/s
    m_F: np.ndarray
    alive: np.ndarray
    stream_id: np.ndarray
    draws: np.ndarray  # next unused draw index of each stream
    seed: int
    time: float = 0.0

    def __len__(self):
        return len(self.position)


@numba.njit(cache=True)
def _sample_kernel(n, seed, kT, mass, u_scale, s_lo, s_hi, U_min, exact, s0, h, Bn, Dn, ex, max_tries):
    pos = np.empty(n)
    vel = np.empty(n)
    draws = np.zeros(n, dtype=np.int64)
    sigma_v = math.sqrt(kT / mass)
    ok = True
    for i in range(n):
        k = 0
        accepted = False
        for _ in range(max_tries):
            s = s_lo + (s_hi - s_lo) * stream_uniform(seed, i, k)
            u = stream_uniform(seed, i, k + 1)
            k += 2
            B, _ = _axial(s, exact, s0, h, Bn, Dn, ex)
            if u < math.exp(-(u_scale * B - U_min) / kT):
                accepted = True
                break
        if not accepted:
            ok = False
        pos[i] = s
        g1, _ = stream_normal_pair(seed, i, k)
        k += 2
        vel[i] = sigma_v * g1
        draws[i] = k
    return pos, vel, draws, ok


def sample_ensemble(model, atom_count, temperature, seed, energy_cap=20.0, max_tries=100000):
    """Thermal ensemble of m_F = 2 atoms around the axial trap minimum.

    Positions are rejection-sampled against exp(-U / k_B T) on the interval
    where ``U - U_min < energy_cap k_B T``; velocities are Maxwell-Boltzmann.
    """
    trap = model.trap
    c = trap.constants
    u_scale = 2 * trap.g_F * c.mu_B
    s_min, B_min = model.minimum()
    n = int(atom_count)
    ids = np.arange(n, dtype=np.uint64)
    if temperature <= 0:
        return EnsembleState(np.full(n, s_min), np.zeros(n), np.full(n, 2, dtype=np.int64),
                             np.ones(n, dtype=bool), ids, np.zeros(n, dtype=np.int64), int(seed))
    kT = c.k_B * temperature
    U_cut = u_scale * B_min + energy_cap * kT
    inside = np.nonzero(u_scale * model.B <= U_cut)[0]
    i_min = int(np.argmin(model.B))
    # contiguous sub-cap interval around the minimum
    breaks = np.nonzero(np.diff(inside) != 1)[0]
    runs = np.split(inside, breaks + 1)
    run = next(r for r in runs if r[0] <= i_min <= r[-1])
    if run[0] == 0 or run[-1] == len(model.B) - 1:
        raise SamplingError("thermal cloud reaches the edge of the simulated region")
    s_lo = model.nodes[run[0] - 1]
    s_hi = model.nodes[run[-1] + 1]
    pos, vel, draws, ok = _sample_kernel(n, np.uint64(seed), kT, c.m_Rb87, u_scale, s_lo, s_hi,
                                         u_scale * B_min, model.exact, model.s0, model.step,
                                         model.B, model.D, model.ex, max_tries)
    if not ok:
        raise SamplingError("rejection sampling did not converge")
    return EnsembleState(pos, vel, np.full(n, 2, dtype=np.int64), np.ones(n, dtype=bool), ids, draws, int(seed))


# ---------------------------------------------------------------------------
# dynamics


@numba.njit(cache=True, parallel=True)
def _evolve_kernel(pos, vel, mF, alive, ids, draws, seed, t0, duration, dt, bg_rate,
                   exact, s0, h, Bn, Dn, Cn, ex, B_res, lz_pref, tip_coupling, mass, muB_gF,
                   s_surface, s_far, immediate, track_energy):
    n = pos.shape[0]
    loss_time = np.full(n, np.inf)
    drift = np.zeros(n)
    crossings = np.zeros(n, dtype=np.int64)
    n_steps = int(round(duration / dt))
    t_end = t0 + n_steps * dt
    n_blocks = (n + LANES - 1) // LANES
    # atoms are advanced LANES at a time so their independent dependency
    # chains overlap; per-atom arithmetic is the same as one-at-a-time
    for b in numba.prange(n_blocks):
        first = b * LANES
        width = min(n, first + LANES) - first
        S = np.empty(LANES)
        V = np.empty(LANES)
        A = np.empty(LANES)
        BB = np.empty(LANES)
        M = np.zeros(LANES, dtype=np.int64)
        K = np.zeros(LANES, dtype=np.int64)
        T_BG = np.full(LANES, np.inf)
        E0 = np.zeros(LANES)
        WORST = np.zeros(LANES)
        LOST = np.full(LANES, np.inf)
        NCROSS = np.zeros(LANES, dtype=np.int64)
        DONE = np.ones(LANES, dtype=np.bool_)
        remaining = 0
        for j in range(width):
            i = first + j
            if not alive[i]:
                LOST[j] = t0
                continue
            DONE[j] = False
            remaining += 1
            k = draws[i]
            if bg_rate > 0:
                T_BG[j] = t0 - math.log(1.0 - stream_uniform(seed, ids[i], k)) / bg_rate
                k += 1
            K[j] = k
            S[j] = pos[i]
            V[j] = vel[i]
            M[j] = mF[i]
            B, D = _axial(S[j], exact, s0, h, Bn, Dn, ex)
            BB[j] = B
            A[j] = -M[j] * muB_gF * D / mass
            E0[j] = 0.5 * mass * V[j] * V[j] + M[j] * muB_gF * B
        t = t0
        for step in range(n_steps):
            if remaining == 0:
                break
            for j in range(width):
                if DONE[j]:
                    continue
                if t + dt > T_BG[j]:
                    LOST[j] = T_BG[j]
                    DONE[j] = True
                    remaining -= 1
                    continue
                s = S[j]
                v = V[j]
                m = M[j]
                B = BB[j]
                vh = v + 0.5 * dt * A[j]
                s_new = s + dt * vh
                if s_new <= s_surface or s_new >= s_far:
                    S[j] = s_new
                    V[j] = vh
                    LOST[j] = t + dt
                    DONE[j] = True
                    remaining -= 1
                    continue
                B_new, D_new = _axial(s_new, exact, s0, h, Bn, Dn, ex)
                a_new = -m * muB_gF * D_new / mass
                v_new = vh + 0.5 * dt * a_new
                if lz_pref > 0 and (B - B_res) * (B_new - B_res) < 0:
                    lo = s
                    hi = s_new
                    f_lo = B - B_res
                    while abs(hi - lo) > BISECT_TOL:
                        mid = 0.5 * (lo + hi)
                        f_mid, _ = _axial(mid, exact, s0, h, Bn, Dn, ex)
                        f_mid -= B_res
                        if f_mid * f_lo > 0:
                            lo = mid
                            f_lo = f_mid
                        else:
                            hi = mid
                    s_c = 0.5 * (lo + hi)
                    frac = (s_c - s) / (s_new - s)
                    v_c = abs(v + frac * (v_new - v))
                    _, D_c = _axial(s_c, exact, s0, h, Bn, Dn, ex)
                    G_c = _coupling_gradient(s_c, exact, s0, h, Cn, ex, D_c, tip_coupling)
                    NCROSS[j] += 1
                    if v_c < V_EPSILON:
                        p = 1.0 if G_c > 0 else 0.0
                    else:
                        p = -math.expm1(-lz_pref * G_c / v_c)
                    u = stream_uniform(seed, ids[first + j], K[j])
                    K[j] += 1
                    if u < p:
                        m = 0 if immediate else m - 1
                        M[j] = m
                        if m <= 0:
                            S[j] = s_c
                            V[j] = v_c
                            LOST[j] = t + frac * dt
                            DONE[j] = True
                            remaining -= 1
                            continue
                        a_new = -m * muB_gF * D_new / mass
                        E0[j] = 0.5 * mass * v_new * v_new + m * muB_gF * B_new
                S[j] = s_new
                V[j] = v_new
                A[j] = a_new
                BB[j] = B_new
                if track_energy:
                    E = 0.5 * mass * v_new * v_new + m * muB_gF * B_new
                    dev = abs(E - E0[j]) / E0[j] if E0[j] > 0 else 0.0
                    if dev > WORST[j]:
                        WORST[j] = dev
            t += dt
        for j in range(width):
            i = first + j
            loss_time[i] = LOST[j]
            drift[i] = WORST[j]
            crossings[i] = NCROSS[j]
            if alive[i]:
                pos[i] = S[j]
                vel[i] = V[j]
                mF[i] = M[j]
                draws[i] = K[j]
                if LOST[j] < np.inf:
                    alive[i] = False
    return loss_time, drift, crossings, t_end


@dataclass
class RunResult:
    times: np.ndarray
    trapped_fraction: np.ndarray
    stderr: np.ndarray
    metadata: dict = field(default_factory=dict)
    loss_times: np.ndarray = None
    energy_drift: np.ndarray = None
    crossings: np.ndarray = None


def trapped_curve(loss_times, times):
    """Fraction of atoms whose loss time is later than each output time.

    The binomial standard error uses the fraction clipped to
    ``[1/(2N), 1 - 1/(2N)]`` so fully trapped or fully lost points still
    carry a usable fit weight.
    """
    lt = np.sort(np.asarray(loss_times))
    n = len(lt)
    alive = n - np.searchsorted(lt, np.asarray(times), side="right")
    frac = alive / n
    q = np.clip(frac, 0.5 / n, 1 - 0.5 / n)
    return frac, np.sqrt(q * (1 - q) / n)


def evolve(state, model, delta_z, duration, dt=1e-7, output_interval=1e-3, background_lifetime=0.184,
           loss_mode="ladder", zeeman_factor=1.0, threads=None, check_energy=True, metadata=None,
           coupling="tip"):
    """Integrate the ensemble for ``duration`` seconds; ``state`` is advanced in place.

    Velocity Verlet in U(m_F); slice crossings by sign change of
    gamma|B| - f_drive with bisection; background loss as an exponential
    lifetime drawn per atom (``background_lifetime=None`` disables it).  In an
    undriven run a per-atom energy drift above 1 % raises
    :class:`InstabilityError`.
    """
    if not dt > 0 or duration < dt:
        raise ValueError("need dt > 0 and duration >= dt")
    if loss_mode not in ("ladder", "immediate"):
        raise ValueError(f"unknown loss mode {loss_mode!r}")
    if coupling not in ("tip", "local"):
        raise ValueError(f"unknown coupling {coupling!r}")
    trap = model.trap
    c = trap.constants
    if threads is not None:
        numba.set_num_threads(int(threads))
    f_drive = (metadata or {}).get("drive_frequency")
    B_res = f_drive / c.gamma_Rb if f_drive else -1.0
    lz_pref = 0.25 * math.pi * zeeman_factor * c.mu_B / c.hbar * delta_z**2 if B_res > 0 else 0.0
    bg_rate = 0.0 if not background_lifetime else 1.0 / background_lifetime
    undriven = lz_pref == 0.0
    loss_time, drift, crossings, t_end = _evolve_kernel(
        state.position, state.velocity, state.m_F, state.alive, state.stream_id, state.draws,
        np.uint64(state.seed), state.time, duration, dt, bg_rate, model.exact, model.s0, model.step,
        model.B, model.D, model.C, model.ex, B_res, lz_pref, coupling == "tip", c.m_Rb87, trap.g_F * c.mu_B,
        model.s_surface, model.s_far, loss_mode == "immediate", bool(check_energy) and undriven)
    if check_energy and undriven and np.max(drift, initial=0.0) > 0.01:
        worst = int(np.argmax(drift))
        raise InstabilityError(f"energy drift {drift[worst]:.3g} for atom {worst}; reduce dt")
    t0 = state.time
    state.time = t_end
    n_out = int(round((t_end - t0) / output_interval))
    times = t0 + output_interval * np.arange(n_out + 1)
    frac, err = trapped_curve(loss_time, times)
    meta = dict(metadata or {})
    meta.update(atom_count=len(state), delta_z=delta_z, loss_mode=loss_mode, dt=dt)
    return RunResult(times - t0, frac, err, meta, loss_time - t0, drift, crossings)


# ---------------------------------------------------------------------------
# trap calibration and frequency sweeps


def oscillation_frequency(model, energy, m_F=2):
    """Axial oscillation frequency (Hz) at ``energy`` (J) above the trap bottom.

    The period ``2 * integral ds / v`` is taken between the turning points
    with the substitution ``s = s1 + (s2 - s1)(1 - cos th) / 2``, which
    removes the inverse-square-root endpoint singularities.
    """
    from scipy import integrate

    if not energy > 0:
        raise ValueError("energy must be positive")
    trap = model.trap
    c = trap.constants
    scale = m_F * trap.g_F * c.mu_B
    s_min, B_min = model.minimum()
    target = B_min + energy / scale

    def excess(s):
        return model(s)[0][0] - target

    lo, hi = model.nodes[0], model.nodes[-1]
    if excess(lo) < 0 or excess(hi) < 0:
        raise SamplingError("turning point lies outside the simulated region")
    s1 = optimize.brentq(excess, lo, s_min, xtol=1e-15)
    s2 = optimize.brentq(excess, s_min, hi, xtol=1e-15)
    half = 0.5 * (s2 - s1)

    def integrand(th):
        s = s1 + half * (1 - math.cos(th))
        kin = energy - scale * (model(s)[0][0] - B_min)
        if kin <= 0:
            return 0.0
        return half * math.sin(th) / math.sqrt(2 * kin / c.m_Rb87)

    period, _ = integrate.quad(integrand, 0.0, math.pi, limit=400, epsabs=0.0, epsrel=1e-8)
    return 1.0 / (2 * period)


def calibrate_quad_gradient(magnet, standoff, temperature, target_frequency, bracket=(1.0, 30.0),
                            step=2e-8, **solve_kw):
    """External quadrupole gradient (T/m) giving ``target_frequency`` at E = k_B T."""
    from .trap import solve_bias

    def miss(G):
        trap, _ = solve_bias(magnet, standoff, quad_gradient=G, **solve_kw)
        model = build_axial_model(trap, temperature, step=step)
        return oscillation_frequency(model, trap.constants.k_B * temperature) - target_frequency

    return optimize.brentq(miss, *bracket, xtol=1e-4, rtol=1e-6)


@dataclass
class Spectrum:
    frequencies: np.ndarray  # Hz
    remaining: np.ndarray
    stderr: np.ndarray
    metadata: dict = field(default_factory=dict)


def frequency_sweep(model, cantilever, drive, f_list, t_interaction, atom_count, temperature, seed,
                    **evolve_kw):
    """Remaining fraction after ``t_interaction`` for each drive frequency.

    Each point gets its own seed derived from ``seed`` and its index, a fresh
    thermal ensemble, and the amplitude ``response_amplitude`` at that
    frequency; the resonant slice follows the drive frequency.
    """
    from .cantilever import response_amplitude
    from .rng import derive_seed

    f_list = np.atleast_1d(np.asarray(f_list, dtype=float))
    if f_list.size == 0:
        raise ValueError("frequency list is empty")
    remaining = np.empty(len(f_list))
    stderr = np.empty(len(f_list))
    for i, f in enumerate(f_list):
        point_seed = derive_seed(seed, i)
        state = sample_ensemble(model, atom_count, temperature, point_seed)
        dz = float(response_amplitude(cantilever, drive, f))
        res = evolve(state, model, dz, t_interaction, output_interval=t_interaction,
                     metadata={"drive_frequency": float(f)}, **evolve_kw)
        remaining[i] = res.trapped_fraction[-1]
        stderr[i] = res.stderr[-1]
    meta = dict(seed=seed, atom_count=int(atom_count), interaction_time=t_interaction)
    return Spectrum(f_list, remaining, stderr, meta)
