import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omx.constants import CONSTANTS, HBAR
from omx.errors import ModelValidationError, NegativeLinewidth, NonPositiveLength, NonPositiveParameter
from omx.ring_cavity import RingCavityParams, solve_resonances
from omx.system_model import (
    PRESET_IDS,
    LinearSystemModel,
    MechanicalOscillator,
    PresetId,
    build_preset,
    combine_coordinates,
    preset_coupled_cavity,
    preset_ligo_arms,
    preset_racetrack,
    preset_ring_cavity_two_mode,
    preset_single_cavity,
    preset_three_mode,
    rotate_basis,
    three_mode_coupling_constant,
    validate,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]])


def sample_presets(carrier=1.77e15):
    """One instance of every preset.

    Multi-mode frequencies sit at ``carrier`` plus MHz offsets; ``carrier=0``
    is the frame rotating at the optical carrier.
    """
    ring = RingCavityParams.lossless_membrane(0.3, 0.01, 1.0, 20)
    return {
        "single_cavity": preset_single_cavity(1.77e15, 1.0),
        "ligo_arms": preset_ligo_arms(1.77e15, 4.4e11),
        "racetrack_dissipative": preset_racetrack(1.77e15, 1e4, 2e3),
        "three_mode": preset_three_mode(carrier - 1e6, carrier + 1e6, 1e9),
        "coupled_cavity": preset_coupled_cavity(carrier - 2e6, carrier + 2e6, 3e6, 1.77e15, 1.6e15),
        "ring_cavity_two_mode": preset_ring_cavity_two_mode(ring, solve_resonances(ring).k_minus),
    }


def test_constants_are_codata_and_frozen():
    assert CONSTANTS.hbar == pytest.approx(1.054571817e-34, rel=1e-12)
    assert CONSTANTS.c == 299792458.0
    with pytest.raises(Exception):
        CONSTANTS.hbar = 1.0


@pytest.mark.parametrize("kw", [dict(m=0), dict(Omega_m=-1), dict(gamma_m=-1e-3), dict(T=-1)])
def test_mechanical_oscillator_rejects_bad_values(kw):
    base = dict(m=1e-12, Omega_m=1e6, gamma_m=1.0, T=0.0)
    base.update(kw)
    with pytest.raises(NonPositiveParameter):
        MechanicalOscillator(**base)


def test_x_zpf():
    mech = MechanicalOscillator(1e-12, 2 * math.pi * 1e6)
    assert mech.x_zpf == pytest.approx(math.sqrt(HBAR / (2 * 1e-12 * 2 * math.pi * 1e6)), rel=1e-15)


def test_validate_accepts_well_formed():
    m = LinearSystemModel(H0=np.diag([1.0, 2.0]), Hj=(SX,))
    assert validate(m) is m


def test_validate_names_non_hermitian_entry():
    H0 = np.array([[1.0, 2.0 + 1j], [2.0 + 1j, 3.0]])
    with pytest.raises(ModelValidationError) as exc:
        validate(LinearSystemModel(H0=H0, Hj=(SX,)))
    (v,) = exc.value.violations
    assert v.kind == "NonHermitian" and v.matrix == "H0"
    assert v.entry in ((0, 1), (1, 0))
    assert v.max_asymmetry == pytest.approx(2.0)


def test_validate_dimension_mismatch_on_hj_count():
    m = LinearSystemModel(H0=np.eye(2), Hj=(SX,), n_mech=2)
    with pytest.raises(ModelValidationError) as exc:
        validate(m)
    assert any(v.kind == "DimensionMismatch" for v in exc.value.violations)


def test_validate_collects_every_violation():
    m = LinearSystemModel(H0=np.eye(2), Hj=(np.array([[0, 1], [2, 0]]), np.ones((3, 3))))
    with pytest.raises(ModelValidationError) as exc:
        validate(m)
    kinds = sorted(v.kind for v in exc.value.violations)
    assert kinds == ["DimensionMismatch", "NonHermitian"]


def test_validate_rejects_more_channels_than_modes():
    m = LinearSystemModel(H0=np.eye(2), Hj=(SX,), Gamma0=np.ones((2, 3)))
    with pytest.raises(ModelValidationError):
        validate(m)


def test_model_arrays_are_read_only():
    m = preset_three_mode(1.0, 2.0, 0.5)
    with pytest.raises(ValueError):
        m.H0[0, 0] = 5.0


@pytest.mark.parametrize("name", PRESET_IDS)
def test_every_preset_validates_and_is_exactly_hermitian(name):
    m = sample_presets()[name]
    assert validate(m) is m
    for h in (m.H0,) + m.Hj:
        assert np.array_equal(h, h.conj().T)


def test_single_cavity():
    m = preset_single_cavity(1.77e15, 1.0)
    assert m.n_modes == 1 and m.n_mech == 1
    assert m.Hj[0][0, 0] == -1.77e15
    assert preset_single_cavity(0.0, 1.0).Hj[0][0, 0] == 0
    assert abs(preset_single_cavity(1.77e15, 1e30).Hj[0][0, 0]) < 1e-14
    with pytest.raises(NonPositiveLength):
        preset_single_cavity(1.0, 0.0)


def test_ligo_arms():
    g = 3.0
    m = preset_ligo_arms(10.0, g)
    assert np.allclose(m.Hj[0] + m.Hj[1], -g * np.eye(2))
    z = preset_ligo_arms(10.0, 0.0)
    assert not np.any(z.Hj[0]) and not np.any(z.Hj[1])


def test_ligo_differential_pencil_in_symmetric_basis():
    g = 3.0
    m = preset_ligo_arms(10.0, g)
    s = 1 / math.sqrt(2)
    # x+- = (x1 +- x2)/sqrt2
    mc = combine_coordinates(m, [[s, s], [s, -s]], ("x+", "x-"))
    assert np.allclose(mc.Hj[1], -g * np.diag([1, -1]) / math.sqrt(2))
    # rotating the optics to (a+b)/sqrt2, (a-b)/sqrt2 gives the sigma_x form
    U = np.array([[s, s], [s, -s]])
    rot = rotate_basis(mc, U)
    assert np.allclose(rot.Hj[1], -(g / math.sqrt(2)) * SX, atol=1e-15)
    assert np.allclose(rot.Hj[0], -(g / math.sqrt(2)) * np.eye(2), atol=1e-15)


def test_racetrack():
    m = preset_racetrack(1.0, 1e4, 5.0)
    assert m.Gamma0[0, 0] == pytest.approx(math.sqrt(2e4))
    assert m.Gammaj[0][0, 0] == 5.0 and m.Hj[0][0, 0] == 0
    assert preset_racetrack(1.0, 0.0, 5.0).Gamma0[0, 0] == 0
    with pytest.raises(NegativeLinewidth):
        preset_racetrack(1.0, -1.0, 5.0)


def test_three_mode_and_coupling_constant():
    m = preset_three_mode(1.0, 2.0, 0.7)
    assert np.array_equal(m.Hj[0], 0.7 * SX)
    args = dict(omega0=1.77e15, omega1=1.77e15, m=1e-3, Omega_m=2 * math.pi * 1e5, L=1.0)
    g1 = three_mode_coupling_constant(1.0, **args)
    assert g1 == pytest.approx(math.sqrt(HBAR * 1.77e15**2 / (1e-3 * 2 * math.pi * 1e5)), rel=1e-14)
    assert three_mode_coupling_constant(4.0, **args) == pytest.approx(2 * g1, rel=1e-14)
    assert three_mode_coupling_constant(0.0, **args) == 0
    with pytest.raises(NonPositiveParameter):
        three_mode_coupling_constant(1.0, **{**args, "m": 0})


def test_coupled_cavity_signs():
    m = preset_coupled_cavity(1.0, 2.0, 0.5, 3.0, 4.0)
    assert np.array_equal(m.H0, [[1.0, 0.5], [0.5, 2.0]])
    assert np.array_equal(m.Hj[0], np.diag([-3.0, 4.0]))


def test_ring_two_mode_preset():
    ring = RingCavityParams.lossless_membrane(0.3, 0.01, 1.0, 20)
    res = solve_resonances(ring)
    m = preset_ring_cavity_two_mode(ring, 5.9e6)
    assert np.allclose(np.diag(m.H0).real, [res.omega_minus, res.omega_plus], rtol=1e-15)
    assert m.Hj[0][0, 1] == pytest.approx(2j * res.omega_s * 5.9e6, rel=1e-15)
    assert m.Hj[0][1, 0] == np.conj(m.Hj[0][0, 1])
    assert np.allclose(m.Gamma0, math.sqrt(2 * ring.t0**2 * 299792458.0 / 2) * np.eye(2))
    assert not np.any(preset_ring_cavity_two_mode(ring, 0.0).Hj[0])
    deg = preset_ring_cavity_two_mode(RingCavityParams.lossless_membrane(0.0, 0.01, 1.0, 20), 1.0)
    assert deg.H0[0, 0] == deg.H0[1, 1]


def test_build_preset_dispatch():
    m = build_preset(PresetId("coupled_cavity", dict(omega1=1, omega2=2, omega_s=0.1, g1=1, g2=1)))
    assert m.n_modes == 2
    with pytest.raises(ValueError):
        PresetId("nope", {})


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=4, max_size=4), st.lists(finite, min_size=4, max_size=4))
def test_rotation_preserves_hermiticity_and_spectrum(a, b):
    A = np.array(a).reshape(2, 2) + 1j * np.array(b).reshape(2, 2)
    H = A + A.conj().T
    U, _ = np.linalg.qr(np.array(a).reshape(2, 2) + 1j * np.eye(2) + 1j * np.array(b).reshape(2, 2) * 1e-3)
    m = LinearSystemModel(H0=H, Hj=(H,))
    r = rotate_basis(m, U)
    validate(r)
    scale = max(1.0, np.abs(H).max())
    assert np.allclose(np.linalg.eigvalsh(r.H0), np.linalg.eigvalsh(H), atol=1e-12 * scale)
