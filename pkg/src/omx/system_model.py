"""Canonical data model for linearized optomechanical systems.

A system with ``N`` optical modes, ``K`` environment channels and ``J``
mechanical coordinates is stored as two matrix pencils,

    H(x) = H0 + sum_j x_j Hj      (N x N, Hermitian, rad/s and rad/s/m)
    G(x) = G0 + sum_j x_j Gj      (N x K, sqrt(rad/s) and sqrt(rad/s)/m)

so that the optical Hamiltonian reads ``hbar a^dag H(x) a + i hbar (a^dag G(x) b - h.c.)``.
All angular frequencies are in rad/s and all lengths in metres.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .constants import HBAR
from .errors import (
    ModelValidationError,
    NegativeLinewidth,
    NonPositiveLength,
    NonPositiveParameter,
)

PRESET_IDS = (
    "single_cavity",
    "ligo_arms",
    "racetrack_dissipative",
    "three_mode",
    "coupled_cavity",
    "ring_cavity_two_mode",
)

HERMITIAN_RTOL = 1e-12


def _frozen(a, dtype=complex):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MechanicalOscillator:
    """Single mechanical mode: mass (kg), resonance and damping (rad/s),
    bath temperature (K) and a static external force (N)."""

    m: float
    Omega_m: float
    gamma_m: float = 0.0
    T: float = 0.0
    G: float = 0.0

    def __post_init__(self):
        if not self.m > 0:
            raise NonPositiveParameter("mass must be > 0")
        if not self.Omega_m > 0:
            raise NonPositiveParameter("Omega_m must be > 0")
        if not self.gamma_m >= 0:
            raise NonPositiveParameter("gamma_m must be >= 0")
        if not self.T >= 0:
            raise NonPositiveParameter("temperature must be >= 0")

    @property
    def x_zpf(self) -> float:
        return float(np.sqrt(HBAR / (2.0 * self.m * self.Omega_m)))


@dataclass(frozen=True)
class Violation:
    kind: str  # "NonHermitian" or "DimensionMismatch"
    matrix: str
    detail: str
    entry: Optional[tuple] = None
    max_asymmetry: Optional[float] = None

    def __str__(self):
        where = f" at {self.entry}" if self.entry is not None else ""
        return f"{self.kind}({self.matrix}{where}): {self.detail}"


@dataclass(frozen=True)
class LinearSystemModel:
    """Matrix-pencil representation of a linearized optomechanical system.

    ``n_modes`` and ``n_mech`` default to the shapes of ``H0`` and ``Hj``;
    passing them explicitly lets :func:`validate` catch inconsistent input.
    ``Gamma0`` defaults to an ``N x 0`` matrix (no environment channels).
    """

    H0: np.ndarray
    Hj: tuple = ()
    Gamma0: Optional[np.ndarray] = None
    Gammaj: Optional[tuple] = None
    n_modes: Optional[int] = None
    n_mech: Optional[int] = None
    mode_labels: tuple = ()
    mech_labels: tuple = ()

    def __post_init__(self):
        H0 = _frozen(np.atleast_2d(self.H0))
        object.__setattr__(self, "H0", H0)
        object.__setattr__(self, "Hj", tuple(_frozen(np.atleast_2d(h)) for h in self.Hj))
        n = H0.shape[0]
        G0 = np.zeros((n, 0)) if self.Gamma0 is None else np.atleast_2d(self.Gamma0)
        object.__setattr__(self, "Gamma0", _frozen(G0))
        if self.Gammaj is None:
            Gj = tuple(_frozen(np.zeros_like(G0)) for _ in self.Hj)
        else:
            Gj = tuple(_frozen(np.atleast_2d(g)) for g in self.Gammaj)
        object.__setattr__(self, "Gammaj", Gj)
        if self.n_modes is None:
            object.__setattr__(self, "n_modes", n)
        if self.n_mech is None:
            object.__setattr__(self, "n_mech", len(self.Hj))
        if not self.mode_labels:
            object.__setattr__(self, "mode_labels", tuple(f"a{i + 1}" for i in range(self.n_modes)))
        if not self.mech_labels:
            object.__setattr__(self, "mech_labels", tuple(f"x{j + 1}" for j in range(self.n_mech)))
        object.__setattr__(self, "mode_labels", tuple(self.mode_labels))
        object.__setattr__(self, "mech_labels", tuple(self.mech_labels))

    @property
    def n_env(self) -> int:
        return self.Gamma0.shape[1]

    def hamiltonian(self, x) -> np.ndarray:
        """H(x) for a displacement vector ``x`` of length ``n_mech``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array(self.H0)
        for xj, h in zip(x, self.Hj):
            out = out + xj * h
        return out

    def coupling(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array(self.Gamma0)
        for xj, g in zip(x, self.Gammaj):
            out = out + xj * g
        return out


def _hermitian_violation(name, mat):
    asym = np.abs(mat - mat.conj().T)
    worst = float(asym.max()) if asym.size else 0.0
    scale = float(np.abs(mat).max()) if mat.size else 0.0
    if worst > HERMITIAN_RTOL * scale:
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        return Violation(
            "NonHermitian", name,
            f"max |M - M^dag| = {worst:.3e} exceeds {HERMITIAN_RTOL:g} * |M|_max",
            entry=(int(i), int(j)), max_asymmetry=worst,
        )
    return None


def validate(model: LinearSystemModel) -> LinearSystemModel:
    """Return ``model`` unchanged if every invariant holds.

    Raises
    ------
    ModelValidationError
        Carries the full list of :class:`Violation` records, each naming the
        offending matrix (and entry, for Hermiticity failures).
    """
    out = []
    n = model.n_modes
    if model.H0.shape != (n, n):
        out.append(Violation("DimensionMismatch", "H0", f"shape {model.H0.shape} != ({n}, {n})"))
    if len(model.Hj) != model.n_mech:
        out.append(Violation("DimensionMismatch", "Hj", f"{len(model.Hj)} matrices for n_mech={model.n_mech}"))
    if len(model.Gammaj) != len(model.Hj):
        out.append(Violation("DimensionMismatch", "Gammaj", f"{len(model.Gammaj)} matrices for {len(model.Hj)} coordinates"))
    for j, h in enumerate(model.Hj):
        if h.shape != (n, n):
            out.append(Violation("DimensionMismatch", f"Hj[{j}]", f"shape {h.shape} != ({n}, {n})"))
    k = model.Gamma0.shape[1]
    if model.Gamma0.shape[0] != n:
        out.append(Violation("DimensionMismatch", "Gamma0", f"{model.Gamma0.shape[0]} rows for {n} modes"))
    if k > n:
        out.append(Violation("DimensionMismatch", "Gamma0", f"K={k} environment channels exceeds N={n}"))
    for j, g in enumerate(model.Gammaj):
        if g.shape != model.Gamma0.shape:
            out.append(Violation("DimensionMismatch", f"Gammaj[{j}]", f"shape {g.shape} != {model.Gamma0.shape}"))
    if len(model.mode_labels) != n:
        out.append(Violation("DimensionMismatch", "mode_labels", f"{len(model.mode_labels)} labels for {n} modes"))
    if len(model.mech_labels) != model.n_mech:
        out.append(Violation("DimensionMismatch", "mech_labels", f"{len(model.mech_labels)} labels for {model.n_mech} coordinates"))

    for name, mat in [("H0", model.H0)] + [(f"Hj[{j}]", h) for j, h in enumerate(model.Hj)]:
        if mat.ndim == 2 and mat.shape[0] == mat.shape[1]:
            v = _hermitian_violation(name, mat)
            if v is not None:
                out.append(v)
    for name, mat in [("H0", model.H0), ("Gamma0", model.Gamma0)]:
        if not np.all(np.isfinite(mat)):
            out.append(Violation("NonFinite", name, "contains NaN or inf"))
    if out:
        raise ModelValidationError(out)
    return model


def rotate_basis(model: LinearSystemModel, U) -> LinearSystemModel:
    """Re-express ``model`` in the optical basis ``a' = U^dag a``.

    ``H0`` is rotated about its mean diagonal so that large optical carrier
    frequencies do not swamp the small splittings in round-off.
    """
    U = np.asarray(U, dtype=complex)
    n = model.n_modes
    mu = np.trace(model.H0).real / n
    shifted = model.H0 - mu * np.eye(n)
    H0 = U.conj().T @ shifted @ U
    H0 = 0.5 * (H0 + H0.conj().T) + mu * np.eye(n)
    Hj = []
    for h in model.Hj:
        r = U.conj().T @ h @ U
        Hj.append(0.5 * (r + r.conj().T))
    return LinearSystemModel(
        H0=H0,
        Hj=tuple(Hj),
        Gamma0=U.conj().T @ model.Gamma0,
        Gammaj=tuple(U.conj().T @ g for g in model.Gammaj),
        mech_labels=model.mech_labels,
    )


def combine_coordinates(model: LinearSystemModel, R, labels: Sequence[str] = ()) -> LinearSystemModel:
    """Change mechanical coordinates to ``y = R x`` for orthogonal ``R``.

    The pencil for ``y_k`` is ``sum_j R[k, j] H_j`` (and likewise for Gamma).
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (model.n_mech, model.n_mech):
        raise ValueError(f"R must be {model.n_mech}x{model.n_mech}")
    Hj = tuple(sum(R[k, j] * model.Hj[j] for j in range(model.n_mech)) for k in range(model.n_mech))
    Gj = tuple(sum(R[k, j] * model.Gammaj[j] for j in range(model.n_mech)) for k in range(model.n_mech))
    return LinearSystemModel(H0=model.H0, Hj=Hj, Gamma0=model.Gamma0, Gammaj=Gj,
                             mode_labels=model.mode_labels, mech_labels=tuple(labels))


def _diag_gamma(n, gamma):
    if gamma < 0:
        raise NegativeLinewidth(f"linewidth must be >= 0, got {gamma}")
    return np.sqrt(2.0 * gamma) * np.eye(n)


# --- presets ---------------------------------------------------------------

def preset_single_cavity(omega_a: float, L: float, gamma: float = 0.0) -> LinearSystemModel:
    """Fabry-Perot cavity with a movable end mirror; coupling g = omega_a / L."""
    if not L > 0:
        raise NonPositiveLength(f"cavity length must be > 0, got {L}")
    g_omega = omega_a / L
    return validate(LinearSystemModel(
        H0=[[omega_a]], Hj=([[-g_omega]],), Gamma0=_diag_gamma(1, gamma),
        mode_labels=("a",), mech_labels=("x",),
    ))


def preset_ligo_arms(omega0: float, g: float, gamma: float = 0.0) -> LinearSystemModel:
    """Two identical arm cavities, each dispersively coupled to its own test mass."""
    return validate(LinearSystemModel(
        H0=np.diag([omega0, omega0]),
        Hj=(np.diag([-g, 0.0]), np.diag([0.0, -g])),
        Gamma0=_diag_gamma(2, gamma),
        mode_labels=("a", "b"), mech_labels=("x1", "x2"),
    ))


def preset_racetrack(omega_a: float, gamma: float, g_gamma: float) -> LinearSystemModel:
    """Single mode whose waveguide coupling rate depends on the displacement."""
    if gamma < 0:
        raise NegativeLinewidth(f"linewidth must be >= 0, got {gamma}")
    return validate(LinearSystemModel(
        H0=[[omega_a]], Hj=([[0.0]],),
        Gamma0=[[np.sqrt(2.0 * gamma)]], Gammaj=([[g_gamma]],),
        mode_labels=("a",), mech_labels=("x",),
    ))


def preset_three_mode(omega1: float, omega2: float, G0: float, gamma: float = 0.0) -> LinearSystemModel:
    """Two transverse cavity modes coupled through an acoustic mode, ``G0 x (a^dag b + h.c.)``."""
    return validate(LinearSystemModel(
        H0=np.diag([omega1, omega2]),
        Hj=(G0 * np.array([[0.0, 1.0], [1.0, 0.0]]),),
        Gamma0=_diag_gamma(2, gamma),
        mode_labels=("a", "b"), mech_labels=("x",),
    ))


def three_mode_coupling_constant(Lambda, omega0, omega1, m, Omega_m, L) -> float:
    """Optoacoustic coupling ``sqrt(Lambda hbar omega0 omega1 / (m Omega_m L^2))``.

    ``omega0``/``omega1`` are the two transverse modes (``omega1``/``omega2`` in
    :func:`preset_three_mode`).  ``Lambda`` is the geometric overlap factor and
    is taken as given.
    """
    for name, v in (("omega0", omega0), ("omega1", omega1), ("m", m), ("Omega_m", Omega_m), ("L", L)):
        if not v > 0:
            raise NonPositiveParameter(f"{name} must be > 0, got {v}")
    if not Lambda >= 0:
        raise NonPositiveParameter(f"Lambda must be >= 0, got {Lambda}")
    return float(np.sqrt(Lambda * HBAR * omega0 * omega1 / (m * Omega_m * L**2)))


def preset_coupled_cavity(omega1, omega2, omega_s, g1, g2, gamma: float = 0.0) -> LinearSystemModel:
    """Two sub-cavities separated by a movable mirror, sloshing at ``omega_s``.

    Signs follow ``(omega1 - g1 x) a^dag a + (omega2 + g2 x) b^dag b``.
    """
    return validate(LinearSystemModel(
        H0=np.array([[omega1, omega_s], [omega_s, omega2]], dtype=float),
        Hj=(np.diag([-g1, g2]),),
        Gamma0=_diag_gamma(2, gamma),
        mode_labels=("a", "b"), mech_labels=("x",),
    ))


def preset_ring_cavity_two_mode(ring, k_p: float) -> LinearSystemModel:
    """Ring cavity with a movable membrane, in the (c-, c+) mode basis.

    The interaction ``2 i omega_s k_p x (c-^dag c+ - h.c.)`` puts
    ``+2i omega_s k_p`` at [0, 1] and its conjugate at [1, 0].
    """
    from . import ring_cavity

    res = ring_cavity.solve_resonances(ring)
    gamma = ring_cavity.linewidth(ring)
    g = 2j * res.omega_s * k_p
    return validate(LinearSystemModel(
        H0=np.diag([res.omega_minus, res.omega_plus]),
        Hj=(np.array([[0.0, g], [np.conj(g), 0.0]]),),
        Gamma0=np.sqrt(2.0 * gamma) * np.eye(2),
        Gammaj=(np.zeros((2, 2)),),
        mode_labels=("c-", "c+"), mech_labels=("x",),
    ))


@dataclass(frozen=True)
class PresetId:
    id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in PRESET_IDS:
            raise ValueError(f"unknown preset {self.id!r}; expected one of {PRESET_IDS}")


PRESET_PARAMS = {
    "single_cavity": ("omega_a", "L"),
    "ligo_arms": ("omega0", "g"),
    "racetrack_dissipative": ("omega_a", "gamma", "g_gamma"),
    "three_mode": ("omega1", "omega2", "G0"),
    "coupled_cavity": ("omega1", "omega2", "omega_s", "g1", "g2"),
    "ring_cavity_two_mode": ("r", "t0", "L", "fsr_index", "k_p"),
}

OPTIONAL_PRESET_PARAMS = {
    "single_cavity": ("gamma",),
    "ligo_arms": ("gamma",),
    "three_mode": ("gamma",),
    "coupled_cavity": ("gamma",),
    "racetrack_dissipative": (),
    "ring_cavity_two_mode": (),
}


def build_preset(preset: PresetId) -> LinearSystemModel:
    """Dispatch a :class:`PresetId` to its builder."""
    p = dict(preset.params)
    if preset.id == "single_cavity":
        return preset_single_cavity(**p)
    if preset.id == "ligo_arms":
        return preset_ligo_arms(**p)
    if preset.id == "racetrack_dissipative":
        return preset_racetrack(**p)
    if preset.id == "three_mode":
        return preset_three_mode(**p)
    if preset.id == "coupled_cavity":
        return preset_coupled_cavity(**p)
    from .ring_cavity import RingCavityParams

    ring = RingCavityParams.lossless_membrane(
        r=p["r"], t0=p["t0"], L=p["L"], fsr_index=int(p["fsr_index"]))
    return preset_ring_cavity_two_mode(ring, p["k_p"])
