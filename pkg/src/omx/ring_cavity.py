"""Optics of a ring cavity with a movable partially reflecting membrane.

The cavity has a front mirror (amplitude transmittance ``t0``) and a lossless
membrane (reflectivity ``r``, transmittance ``i t``) at the midpoint of a loop
of length ``L``.  The membrane couples the clockwise and counter-clockwise
waves into a symmetric mode ``c+`` and an antisymmetric mode ``c-`` split by
``2 omega_s``.  Moving the membrane by ``x`` leaves both frequencies alone but
rotates the mode profiles, which is a purely coherent optomechanical coupling.

Phases are handled through the loop phase ``k L``.  For very large FSR
indices ``N`` the absolute phase carries ``~eps * 2 pi N`` round-off, so
precision checks are best run at moderate ``N``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize

from .constants import C_LIGHT, EPS0, HBAR
from .errors import (
    InvalidRingParameters,
    LinearizationWarning,
    OutOfDomain,
    QuadratureFailure,
    SingularResponse,
)

UNIT_TOL = 1e-12
LINEARIZATION_LIMIT = 0.01


@dataclass(frozen=True)
class RingCavityParams:
    r: float
    t: float
    t0: float
    r0: float
    L: float
    fsr_index: int
    area: float = 1e-6  # m^2, cancels in every reported observable

    def __post_init__(self):
        problems = []
        if not 0.0 <= self.r <= 1.0:
            problems.append(f"r={self.r} outside [0, 1]")
        if not self.t >= 0.0 or abs(self.r**2 + self.t**2 - 1.0) > UNIT_TOL:
            problems.append(f"r^2 + t^2 = {self.r**2 + self.t**2!r} != 1 (lossless membrane)")
        # t0 = 0 is accepted as the closed-cavity limit
        if not 0.0 <= self.t0 <= 1.0:
            problems.append(f"t0={self.t0} outside [0, 1]")
        if not self.r0 >= 0.0 or abs(self.r0**2 + self.t0**2 - 1.0) > UNIT_TOL:
            problems.append(f"r0^2 + t0^2 = {self.r0**2 + self.t0**2!r} != 1")
        if not self.L > 0:
            problems.append(f"L={self.L} must be > 0")
        if int(self.fsr_index) != self.fsr_index or self.fsr_index < 1:
            problems.append(f"fsr_index={self.fsr_index} must be a positive integer")
        if not self.area > 0:
            problems.append(f"area={self.area} must be > 0")
        if problems:
            raise InvalidRingParameters("; ".join(problems))
        object.__setattr__(self, "fsr_index", int(self.fsr_index))

    @classmethod
    def lossless_membrane(cls, r: float, t0: float, L: float, fsr_index: int,
                          area: float = 1e-6) -> "RingCavityParams":
        """Fill in ``t`` and ``r0`` from energy conservation."""
        r, t0 = float(r), float(t0)
        return cls(r=r, t=math.sqrt(max(0.0, 1.0 - r * r)), t0=t0,
                   r0=math.sqrt(max(0.0, 1.0 - t0 * t0)), L=float(L),
                   fsr_index=fsr_index, area=area)

    @classmethod
    def for_wavelength(cls, r, t0, L, wavelength, area=1e-6):
        """Pick the FSR branch closest to a vacuum wavelength."""
        n = max(1, int(round(L / wavelength)))
        return cls.lossless_membrane(r, t0, L, n, area)


class TransferMatrices(NamedTuple):
    T_ec: np.ndarray
    T_cf: np.ndarray
    T_ca: np.ndarray
    M: np.ndarray
    T_p: np.ndarray
    T_in: np.ndarray


class ResonancePair(NamedTuple):
    k_minus: float
    k_plus: float
    omega_minus: float
    omega_plus: float
    omega_s: float
    fsr: float
    fsr_index: int


def transfer_matrices(k: float, x: float, p: RingCavityParams) -> TransferMatrices:
    """Propagation, front-mirror and membrane matrices at wavenumber ``k``."""
    L = p.L
    # shared arm phase factored out so it cancels exactly in T_p
    half = np.exp(1j * k * L / 2)
    ph_a = half * np.exp(1j * k * x)
    ph_b = half * np.exp(-1j * k * x)
    T_ec = np.array([[0, ph_a], [ph_b, 0]], dtype=complex)
    T_cf = np.array([[p.r0 * ph_a, 0], [0, p.r0 * ph_b]], dtype=complex)
    T_ca = np.array([[p.t0, 0], [0, p.t0]], dtype=complex)
    M = np.array([[p.r, 1j * p.t], [1j * p.t, p.r]], dtype=complex)
    return TransferMatrices(T_ec, T_cf, T_ca, M, T_ec @ T_cf @ M, T_ec @ T_ca)


def round_trip_matrix(k: float, p: RingCavityParams, lossless: bool = True) -> np.ndarray:
    """``T_p = T_ec T_cf M`` in closed form (independent of ``x``)."""
    r0 = 1.0 if lossless else p.r0
    e = r0 * np.exp(1j * k * p.L)
    return e * np.array([[1j * p.t, p.r], [p.r, 1j * p.t]])


def closed_loop_matrix(k: float, p: RingCavityParams, lossless: bool = True) -> np.ndarray:
    """``T_c = I - T_p``.  The lossless form (front mirror fully reflecting) is
    the one whose determinant fixes the resonances."""
    return np.eye(2) - round_trip_matrix(k, p, lossless)


def closed_loop_det(k: float, p: RingCavityParams) -> complex:
    """Expanded ``det T_c = (1 - i t e^{ikL})^2 - r^2 e^{2ikL}`` (lossless)."""
    e = np.exp(1j * k * p.L)
    return (1 - 1j * p.t * e) ** 2 - p.r**2 * e**2


def solve_resonances(p: RingCavityParams) -> ResonancePair:
    """Resonant wavenumbers on FSR branch ``p.fsr_index``.

    ``exp(i k L) = +-r - i t`` on the principal branch of the logarithm, plus
    ``2 pi N / L``.  The splitting is reported in its closed form
    ``omega_s = c arcsin(r) / L`` which the log solution reproduces exactly.
    """
    L = p.L
    branch = 2 * math.pi * p.fsr_index / L
    # complex() keeps the signed zero so that r = 1 lands on the -pi side
    k_plus = (np.log(complex(p.r, -p.t)) / (1j * L)).real + branch
    k_minus = (np.log(complex(-p.r, -p.t)) / (1j * L)).real + branch
    return ResonancePair(
        k_minus=k_minus,
        k_plus=k_plus,
        omega_minus=C_LIGHT * k_minus,
        omega_plus=C_LIGHT * k_plus,
        omega_s=C_LIGHT * math.asin(p.r) / L,
        fsr=2 * math.pi * C_LIGHT / L,
        fsr_index=p.fsr_index,
    )


def scan_resonances(p: RingCavityParams, n_grid: int = 20001) -> tuple:
    """Locate the two zeros of ``det T_c`` within one FSR numerically.

    Works in the detuning ``delta = k L + pi/2 - 2 pi N`` where the lossless
    determinant reads ``(1 - t e^{i delta})^2 + r^2 e^{2 i delta}``.  A grid
    search brackets the two minima of ``|det|`` and Newton's method on the
    analytic determinant polishes them.  Returns ``(delta_minus, delta_plus)``.
    """
    t, r = p.t, p.r

    def det(d):
        e = np.exp(1j * d)
        return (1 - t * e) ** 2 + r**2 * e**2

    def ddet(d):
        e = np.exp(1j * d)
        return -2j * t * e * (1 - t * e) + 2j * r**2 * e**2

    grid = np.linspace(-math.pi, math.pi, n_grid)
    mag = np.abs(det(grid))
    inner = np.flatnonzero((mag[1:-1] <= mag[:-2]) & (mag[1:-1] <= mag[2:])) + 1
    if mag[0] <= mag[1]:
        inner = np.append(inner, 0)
    cands = sorted(inner, key=lambda i: mag[i])
    roots = []
    for i in cands:
        d = complex(grid[i])
        for _ in range(60):
            step = det(d) / ddet(d)
            d -= step
            if abs(step) < 1e-16:
                break
        d = ((d.real + math.pi) % (2 * math.pi)) - math.pi
        if all(abs(d - q) > 1e-9 for q in roots):
            roots.append(d)
        if len(roots) == 2:
            break
    if len(roots) == 1:  # r = 0: the two roots coincide
        roots.append(roots[0])
    lo, hi = sorted(roots)
    return lo, hi


def delta_to_k(delta, p: RingCavityParams):
    return (np.asarray(delta) - math.pi / 2 + 2 * math.pi * p.fsr_index) / p.L


def k_to_delta(k, p: RingCavityParams):
    return np.asarray(k) * p.L + math.pi / 2 - 2 * math.pi * p.fsr_index


def linewidth(p: RingCavityParams) -> float:
    """Amplitude decay rate ``gamma = c t0^2 / (2 L)``."""
    return C_LIGHT * p.t0**2 / (2 * p.L)


def intracavity_response(k_p: float, x: float, p: RingCavityParams, a) -> np.ndarray:
    """Steady-state membrane-incident fields ``e = T_c^-1 T_in a`` for the open cavity."""
    a = np.asarray(a, dtype=complex).reshape(2)
    Tc = closed_loop_matrix(k_p, p, lossless=False)
    T_in = transfer_matrices(k_p, x, p).T_in
    det = Tc[0, 0] * Tc[1, 1] - Tc[0, 1] * Tc[1, 0]
    if abs(det) < 1e-14 * max(1.0, float(np.abs(Tc).max()) ** 2):
        raise SingularResponse(f"pump sits on a cavity pole (|det T_c| = {abs(det):.3e})")
    return np.linalg.solve(Tc, T_in @ a)


def response_sweep(p: RingCavityParams, deltas, x: float = 0.0, a=(1.0, 0.0)) -> np.ndarray:
    """``|e1/a1|`` and ``|e2/a1|`` over detunings ``delta`` (single-port drive).

    Returns an array of shape ``(len(deltas), 2)``.  Vectorized 2x2 solve;
    the loop phase is built from ``delta`` directly to avoid large-``N`` round-off.
    """
    d = np.atleast_1d(np.asarray(deltas, dtype=float))
    a = np.asarray(a, dtype=complex)
    e = p.r0 * (-1j) * np.exp(1j * d)  # r0 e^{ikL}
    c11 = 1 - 1j * p.t * e
    c12 = -p.r * e
    det = c11 * c11 - c12 * c12
    if np.any(np.abs(det) < 1e-14):
        raise SingularResponse("sweep crosses a cavity pole")
    k = delta_to_k(d, p)
    # T_in a with T_ec off-diagonal phases e^{ik(L/2 +- x)}
    b1 = p.t0 * np.exp(1j * k * (p.L / 2 + x)) * a[1]
    b2 = p.t0 * np.exp(1j * k * (p.L / 2 - x)) * a[0]
    e1 = (c11 * b1 - c12 * b2) / det
    e2 = (c11 * b2 - c12 * b1) / det
    return np.column_stack([np.abs(e1), np.abs(e2)]) / abs(a[0] if a[0] != 0 else 1.0)


def sweep_peaks(p: RingCavityParams, n_grid: int = 40001, x: float = 0.0) -> tuple:
    """Detunings of the two intracavity-power maxima over one FSR."""
    grid = np.linspace(-math.pi, math.pi, n_grid)

    def power(d):
        v = response_sweep(p, d, x)
        return float((v**2).sum())

    vals = (response_sweep(p, grid, x) ** 2).sum(axis=1)
    peaks = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
    peaks = sorted(peaks, key=lambda i: -vals[i])[:2]
    step = grid[1] - grid[0]
    out = []
    for i in peaks:
        res = optimize.minimize_scalar(lambda d: -power(d), bounds=(grid[i] - step, grid[i] + step),
                                       method="bounded", options={"xatol": 1e-15})
        out.append(float(res.x))
    if len(out) == 1:
        out.append(out[0])
    return tuple(sorted(out))


def fit_linewidth(p: RingCavityParams, branch: str = "minus", span: float = 10.0, n: int = 2001) -> float:
    """Half-width (rad/s) of a Lorentzian fitted to the intracavity power.

    The drive frequency is swept ``+-span`` linewidths around the chosen
    resonance; the fitted half-width is an independent estimate of ``gamma``.
    """
    gamma = linewidth(p)
    if gamma == 0:
        raise ValueError("closed cavity has no finite linewidth to fit")
    d0 = math.asin(p.r) * (1 if branch == "plus" else -1)
    dd = span * gamma * p.L / C_LIGHT
    deltas = d0 + np.linspace(-dd, dd, n)
    power = (response_sweep(p, deltas) ** 2).sum(axis=1)
    w = (deltas - d0) * C_LIGHT / p.L  # rad/s offset from resonance

    def lorentz(w, A, w0, hw):
        return A / ((w - w0) ** 2 + hw**2)

    # fit in units of gamma and peak power to keep the problem well scaled
    u, y = w / gamma, power / power.max()
    with warnings.catch_warnings():
        # an exact Lorentzian leaves zero residual and an undefined covariance
        warnings.simplefilter("ignore", optimize.OptimizeWarning)
        popt, _ = optimize.curve_fit(lorentz, u, y, p0=(1.0, 0.0, 1.0), maxfev=20000)
    return abs(float(popt[2])) * gamma


# --- mode profiles and energy ----------------------------------------------

def fold(z, L):
    """Map positions onto the circular coordinate ``[0, L)``."""
    return np.mod(z, L)


def mode_profile(branch: str, x: float, p: RingCavityParams, z):
    """Standing-wave amplitude ``P(z; x)`` of the ``plus`` or ``minus`` mode.

    With the membrane at ``z_x = L/2 + x``::

        P-(z) = 2i sin(k-(z - x))      z < z_x
                2i sin(k-(z - L - x))  z > z_x
        P+(z) = 2 cos(k+(z - x))       z < z_x
                2 cos(k+(z - L - x))   z > z_x

    ``z`` must lie in ``[0, L]``; ``z = L`` is the same point as ``z = 0``.
    """
    if branch not in ("plus", "minus"):
        raise ValueError("branch must be 'plus' or 'minus'")
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z < 0) or np.any(z > p.L):
        raise OutOfDomain(f"z must lie in [0, L] with L={p.L}")
    if not abs(x) < p.L / 2:
        raise OutOfDomain(f"membrane displacement |x| must be < L/2, got {x}")
    z = np.where(z == p.L, 0.0, z)
    res = solve_resonances(p)
    zx = p.L / 2 + x
    arg = np.where(z < zx, z - x, z - p.L - x)
    if branch == "minus":
        return 2j * np.sin(res.k_minus * arg)
    return (2 * np.cos(res.k_plus * arg)).astype(complex)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
QUAD_PHASE_LIMIT = 4000.0  # above this k L, switch to fixed Gauss-Legendre panels


def _panel_integral(f, a, b, n_panels, chunk=20000):
    edges = np.linspace(a, b, n_panels + 1)
    total = 0.0
    for s in range(0, n_panels, chunk):
        e = min(s + chunk, n_panels)
        lo, hi = edges[s:e], edges[s + 1:e + 1]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        total += float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * f(pts)))
    return total


def _integrate(f, a, b, kmax):
    if b <= a:
        return 0.0
    phase = kmax * (b - a)
    if phase > QUAD_PHASE_LIMIT:
        return _panel_integral(f, a, b, int(math.ceil(phase / 2.0)) + 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-11,
                                    limit=max(200, int(phase) * 4))
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    return val


def energy_matrix(x: float, p: RingCavityParams) -> np.ndarray:
    """Hermitian 2x2 form ``W`` with cavity energy ``c^dag W c`` in the (c-, c+) basis.

    ``W = 2 A eps0 N_i N_j int conj(P_i) P_j dz`` with the field prefactor
    ``sqrt(hbar / (4 A eps0 L))`` per mode and ``N_i = sqrt(omega_i)``
    folded in.  The integral is split at the membrane.
    """
    res = solve_resonances(p)
    zx = p.L / 2 + x
    kmax = max(abs(res.k_minus), abs(res.k_plus))
    pref = 2 * p.area * EPS0 * HBAR / (4 * p.area * EPS0 * p.L)
    om = (res.omega_minus, res.omega_plus)

    def piece(i, j, part):
        def f(z):
            zz = np.asarray(z, dtype=float)
            arg = np.where(zz < zx, zz - x, zz - p.L - x)
            P = [2j * np.sin(res.k_minus * arg), 2 * np.cos(res.k_plus * arg) + 0j]
            v = np.conj(P[i]) * P[j]
            return v.real if part == 0 else v.imag
        return f

    W = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(i, 2):
            vals = []
            for part in (0, 1):
                if i == j and part == 1:
                    vals.append(0.0)
                    continue
                f = piece(i, j, part)
                vals.append(_integrate(f, 0.0, zx, kmax) + _integrate(f, zx, p.L, kmax))
            W[i, j] = pref * math.sqrt(om[i] * om[j]) * complex(vals[0], vals[1])
            W[j, i] = np.conj(W[i, j])
    return W


def cavity_energy(x: float, p: RingCavityParams, c_minus: complex, c_plus: complex) -> float:
    """Total optical energy (J) for mode amplitudes ``c-``, ``c+``."""
    c = np.array([c_minus, c_plus], dtype=complex)
    if not np.any(c):
        return 0.0
    return float(np.real(c.conj() @ energy_matrix(x, p) @ c))


def energy_closed_form(p: RingCavityParams) -> tuple:
    """Exact diagonal energies ``hbar w-(1 - sin(k-L)/(k-L))``, ``hbar w+(1 + sin(k+L)/(k+L))``.

    These approach ``hbar w`` as ``k L`` grows; the correction is ``t/(kL)``.
    """
    res = solve_resonances(p)
    km, kp = res.k_minus * p.L, res.k_plus * p.L
    return (HBAR * res.omega_minus * (1 - math.sin(km) / km),
            HBAR * res.omega_plus * (1 + math.sin(kp) / kp))


# --- mode mixing -----------------------------------------------------------

def mode_mixing(x: float, k_p: float, exact: bool = False) -> np.ndarray:
    """Map ``(c-(0), c+(0)) -> (c-(x), c+(x))``.

    The exact map is the rotation ``[[cos q, -i sin q], [-i sin q, cos q]]``
    with ``q = k_p x``; by default its first-order form
    ``I + x [[0, -i k_p], [-i k_p, 0]]`` is returned.
    """
    q = k_p * x
    if exact:
        c, s = math.cos(q), math.sin(q)
        return np.array([[c, -1j * s], [-1j * s, c]])
    if abs(q) > LINEARIZATION_LIMIT:
        warnings.warn(f"|k_p x| = {abs(q):.3g} exceeds {LINEARIZATION_LIMIT}; "
                      "first-order mixing is inaccurate", LinearizationWarning, stacklevel=2)
    return np.array([[1, -1j * q], [-1j * q, 1]])


def mode_transform(x: float, k_p: float, L: float, exact: bool = True) -> np.ndarray:
    """Map the travelling-wave amplitudes ``(c1, c2)`` onto ``(c-(x), c+(x))``.

    With ``exact=False`` the displacement phases are expanded to first order.
    """
    pre = np.exp(1j * k_p * L / 2) / math.sqrt(2)
    q = k_p * x
    if exact:
        em, ep = np.exp(-1j * q), np.exp(1j * q)
    else:
        em, ep = 1 - 1j * q, 1 + 1j * q
    return pre * np.array([[em, -ep], [em, ep]])


def environment_coupling(x: float, p: RingCavityParams, k_p: float, exact: bool = True) -> np.ndarray:
    """Coupling matrix between ``(c-(x), c+(x))`` and the input modes ``(a-(x), a+(x))``.

    Each travelling wave ``c_i`` couples to its own port with ``sqrt(2 gamma)``.
    Both triples are re-expressed through the inverse of :func:`mode_transform`
    (computed numerically), giving ``sqrt(2 gamma) T^-dag T^-1``.
    """
    Ti = np.linalg.inv(mode_transform(x, k_p, p.L, exact))
    return math.sqrt(2 * linewidth(p)) * (Ti.conj().T @ Ti)


def environment_linear_coefficient(p: RingCavityParams, k_p: float, h: float = 1e-3,
                                   exact: bool = True) -> float:
    """Linear-in-displacement part of :func:`environment_coupling`, dimensionless.

    Central difference in ``q = k_p x`` (the map's only length scale is
    ``1/k_p``) with step ``h``, largest entry, normalized by ``sqrt(2 gamma)``.
    """
    scale = math.sqrt(2 * linewidth(p))
    if scale == 0:
        return 0.0
    d = (environment_coupling(h / k_p, p, k_p, exact) - environment_coupling(-h / k_p, p, k_p, exact)) / (2 * h)
    return float(np.abs(d).max()) / scale


def coherent_coupling_strength(p: RingCavityParams, k_p: float) -> complex:
    """``g = 2 i omega_s k_p`` (rad/s per m)."""
    return 2j * solve_resonances(p).omega_s * k_p
