import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from squeezetrap.coherent import ModeLabels, disk_to_xieta, h4_average, husimi_Q, kinetic_expectation
from squeezetrap.dynamics import (
    CSV_HEADER,
    HamiltonianParams,
    PhaseState,
    classical_hamiltonian,
    disk_eom_rhs,
    eom_rhs,
    gradient,
    hamiltonian_terms,
    hamiltonian_xieta,
    integrate,
    integrate_disk,
)
from squeezetrap.errors import DivergenceError, InvalidArgumentError
from squeezetrap.trap import DriveParams, Particle, TrapGeometry, elastic_constants
from squeezetrap.verify import demo_params

ORIGIN = PhaseState.from_disk(0j, 0j)


def harmonic(omega_a=0.7, omega_r=0.9, **build):
    build.setdefault("hbar", 1.0)
    return HamiltonianParams.build(
        Particle(1.0, 1.0), TrapGeometry(c2=-0.02, B0=0.0), DriveParams(0.3, 1.0, 1.0),
        omega_a=omega_a, omega_r=omega_r, **build,
    )


def disk_point(rng, radius):
    r, th = radius * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
    return complex(r * math.cos(th), r * math.sin(th))


def test_params_validation():
    p = harmonic()
    with pytest.raises(InvalidArgumentError):
        HamiltonianParams(ModeLabels(0.5, 0), p.labels_r, 0, p.frequencies, p.particle, p.geometry, p.drive)
    with pytest.raises(InvalidArgumentError):
        HamiltonianParams(p.labels_a, ModeLabels(1.0, 0), 0, p.frequencies, p.particle, p.geometry, p.drive)


def test_identity_point_energy():
    p = harmonic(m_a=1, l=2, m_r=3)
    t = 0.4
    K_r, K_a = elastic_constants(p.particle, p.geometry, p.drive, t)
    wa, wr = 0.25 + 1, 1.5 + 3
    expected = 0.9 * wr + 2 * 0.7 * wa + 2 * K_r * wr / 0.9 + 2 * K_a * wa / 0.7
    assert classical_hamiltonian(ORIGIN, t, p) == pytest.approx(expected, rel=1e-14)


def test_origin_anharmonic_cancellation():
    p = HamiltonianParams.build(
        Particle(1.0, 1.0), TrapGeometry(c2=-0.02, D=0.3), DriveParams(0.3, 1.0, 1.0),
        omega_a=0.7, omega_r=0.9, hbar=1.0, physical_scales=False,
    )
    assert hamiltonian_terms(ORIGIN, 0.2, p)["H4"] == 0.0


def test_term_decomposition():
    p = HamiltonianParams.build(
        Particle(1.0, 1.0), TrapGeometry(c2=-0.02, D=0.3, B0=0.1), DriveParams(0.3, 1.0, 1.0),
        omega_a=0.7, omega_r=0.9, hbar=1.0, k_a=0.75, m_a=1, l=1, m_r=2, physical_scales=False,
    )
    za, zr, t = 0.2 - 0.1j, 0.3j, 0.6
    s = PhaseState.from_disk(za, zr)
    la, lr = p.labels_a, p.labels_r
    K_r, K_a = elastic_constants(p.particle, p.geometry, p.drive, t)
    xa, xr = s.axial.xi, s.radial.xi
    S = [xa * husimi_Q(1, la), xa**2 * husimi_Q(2, la), xr * husimi_Q(1, lr), xr**2 * husimi_Q(2, lr)]
    A = p.drive.U0 + p.drive.V0 * math.cos(t)
    wc = p.frequencies.omega_c
    expected = (
        0.9 * kinetic_expectation(zr, lr) + 2 * 0.7 * kinetic_expectation(za, la)
        + 2 * K_r * lr.weight * xr / 0.9 + 2 * K_a * la.weight * xa / 0.7
        - wc / 2 * p.l + A * 0.3 * h4_average(*S)
    )
    assert classical_hamiltonian(s, t, p) == pytest.approx(expected, rel=1e-12)
    assert sum(hamiltonian_terms(s, t, p).values()) == pytest.approx(expected, rel=1e-12)


def test_eta_partials_are_constant():
    p = demo_params()
    rng = np.random.default_rng(0)
    for _ in range(5):
        s = PhaseState.from_disk(disk_point(rng, 0.8), disk_point(rng, 0.8))
        g = gradient(s, rng.uniform(0, 5), p)
        assert g[1] == 2 * p.frequencies.omega_a * p.labels_a.weight
        assert g[3] == p.frequencies.omega_r * p.labels_r.weight


def test_harmonic_xi_partial():
    p = harmonic(l=1, m_r=2)
    K_r, _ = elastic_constants(p.particle, p.geometry, p.drive, 1.2)
    s = PhaseState.from_disk(0.3, -0.2j)
    assert gradient(s, 1.2, p)[2] == pytest.approx(2 * K_r * p.labels_r.weight / 0.9, rel=1e-14)


def _fd_gradient(p, s, t, h=1e-6):
    x = [s.axial.xi, s.axial.eta, s.radial.xi, s.radial.eta]
    out = []
    for i in range(4):
        step = h * max(1.0, abs(x[i]))
        up, dn = list(x), list(x)
        up[i] += step
        dn[i] -= step
        out.append((hamiltonian_xieta(*up, t, p) - hamiltonian_xieta(*dn, t, p)) / (2 * step))
    return np.array(out)


@pytest.mark.parametrize("kind", ("combined", "ideal-paul"))
def test_gradient_finite_differences(kind):
    rng = np.random.default_rng(5)
    geo = TrapGeometry(c2=-0.02, D=0.01, C4=0.003, C6=-0.0004, B0=0.1, kind=kind)
    p = HamiltonianParams.build(
        Particle(1.0, 1.0), geo, DriveParams(0.3, 1.0, 1.0), omega_a=0.7, omega_r=0.9,
        hbar=1.0, k_a=0.75, m_a=1, l=2, m_r=1, physical_scales=False,
    )
    for _ in range(50):
        s = PhaseState.from_disk(disk_point(rng, 0.7), disk_point(rng, 0.7))
        t = rng.uniform(0, 6)
        g, fd = np.array(gradient(s, t, p)), _fd_gradient(p, s, t)
        assert np.max(np.abs(g - fd)) / np.max(np.abs(g)) < 1e-6


def test_sigma_zero_freezes_xi_eta():
    p = demo_params()
    s = PhaseState(disk_to_xieta(0.4), disk_to_xieta(-0.3))
    d = eom_rhs(s, 0.3, p)
    assert d[0] == 0 and d[1] == 0 and d[3] == 0 and d[4] == 0


def test_matched_harmonic_fixed_point():
    d = DriveParams(-2.0, 0.0, 1.0)
    g = TrapGeometry(c2=-0.05, B0=1.0)
    p = HamiltonianParams.build(Particle(1.0, 1.0), g, d, hbar=1.0, m_a=2, l=1, m_r=1)
    assert max(abs(v) for v in eom_rhs(ORIGIN, 0.0, p)) < 1e-15
    traj = integrate(ORIGIN, 0.0, 50.0, p)
    assert np.abs(traj.states - ORIGIN.as_array()).max() < 1e-14


def test_generic_identity_sigma_rate():
    p = demo_params()
    ga = gradient(ORIGIN, 0.8, p)
    d = eom_rhs(ORIGIN, 0.8, p)
    assert p.labels_a.weight * d[2] == pytest.approx(ga[1] - ga[0], rel=1e-13)
    assert p.labels_r.weight * d[5] == pytest.approx(ga[3] - ga[2], rel=1e-13)


def test_disk_harmonic_riccati_form():
    p = harmonic(m_a=1, l=1)
    t, za, zr = 0.7, 0.2 + 0.3j, -0.4 + 0.1j
    c = p.coefficients(t)
    dza, dzr = disk_eom_rhs(za, zr, t, p)
    for dz, z, A, B in ((dza, za, c.A_a, c.B_a), (dzr, zr, c.A_r, c.B_r)):
        assert 1j * dz == pytest.approx((A + B) * z + (B - A) / 2 * (z * z + 1), rel=1e-13)


def test_disk_fixed_point():
    d = DriveParams(-2.0, 0.0, 1.0)
    p = HamiltonianParams.build(Particle(1.0, 1.0), TrapGeometry(c2=-0.05, B0=1.0), d, hbar=1.0)
    assert disk_eom_rhs(0, 0, 0.0, p) == (0, 0)


def _pushforward(z, dz):
    d = 1 - abs(z) ** 2
    xi = 2 * ((1 + z.conjugate()) ** 2 * dz).real / d**2
    eta = -2 * ((1 - z.conjugate()) ** 2 * dz).real / d**2
    # sigma = (z - z*)/(i d)
    sig = (2 * dz.imag * d + 2 * z.imag * 2 * (z.conjugate() * dz).real) / d**2
    return xi, eta, sig


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 0.85), st.floats(0, 6.3), st.floats(0, 0.85), st.floats(0, 6.3), st.floats(0, 10))
def test_disk_and_xieta_rhs_consistent(ra, ta, rr, tr, t):
    p = demo_params(seed=2)
    za, zr = ra * complex(math.cos(ta), math.sin(ta)), rr * complex(math.cos(tr), math.sin(tr))
    dza, dzr = disk_eom_rhs(za, zr, t, p)
    d = eom_rhs(PhaseState.from_disk(za, zr), t, p)
    expected = _pushforward(za, dza) + _pushforward(zr, dzr)
    scale = max(1.0, max(abs(v) for v in d))
    assert np.max(np.abs(np.array(d) - np.array(expected))) < 1e-9 * scale


def test_constraint_rate_vanishes():
    p = demo_params(seed=4)
    rng = np.random.default_rng(3)
    for _ in range(20):
        s = PhaseState.from_disk(disk_point(rng, 0.9), disk_point(rng, 0.9))
        d = eom_rhs(s, rng.uniform(0, 10), p)
        for (x, e, sg), (dx, de, ds) in ((s.axial.as_tuple(), d[:3]), (s.radial.as_tuple(), d[3:])):
            assert abs(2 * sg * ds - dx * e - x * de) < 1e-12 * max(1.0, abs(dx * e) + abs(x * de))


def test_zero_length_interval():
    p = demo_params()
    s = PhaseState.from_disk(0.1j, 0.2)
    traj = integrate(s, 3.0, 3.0, p)
    assert len(traj) == 1 and np.array_equal(traj.states[0], s.as_array())


def test_reversed_interval_rejected():
    with pytest.raises(InvalidArgumentError):
        integrate(ORIGIN, 1.0, 0.0, demo_params())
    with pytest.raises(InvalidArgumentError):
        integrate(ORIGIN, 0.0, 1.0, demo_params(), tol=0.0)


def test_times_strictly_increasing_and_residuals_recorded():
    p = demo_params()
    traj = integrate(PhaseState.from_disk(0.2, 0.1j), 0.0, 3 * p.drive.period, p)
    assert np.all(np.diff(traj.t) > 0)
    assert traj.residuals.shape == (len(traj), 2)
    assert traj.max_residual < 1e-8


def test_divergence_carries_partial():
    # effective axial Mathieu point (4a, 4q) = (0, 3.2) is deep in the unstable band
    p = HamiltonianParams.build(
        Particle(1.0, 1.0), TrapGeometry(c2=-0.1), DriveParams(0.0, 1.0, 1.0),
        hbar=1.0, physical_scales=False,
    )
    with pytest.raises(DivergenceError) as info:
        integrate(PhaseState.from_disk(0.1, 0.0), 0.0, 400.0, p, divergence_bound=1e6)
    partial = info.value.partial
    assert partial is not None and len(partial) > 1
    assert partial.t[-1] < 400.0


def test_t_eval_sampling():
    p = demo_params()
    ts = np.linspace(0, 2 * p.drive.period, 7)
    traj = integrate(ORIGIN, 0.0, ts[-1], p, t_eval=ts)
    assert np.array_equal(traj.t, ts)
    _, Z, dtraj = integrate_disk(0j, 0j, 0.0, ts[-1], p, t_eval=ts)
    assert Z.shape == (7, 2) and np.array_equal(dtraj.t, ts)


def test_csv_format():
    p = demo_params()
    traj = integrate(PhaseState.from_disk(0.2, 0.1j), 0.0, 1.0, p)
    buf = io.StringIO()
    traj.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == len(traj) + 1
    row = [float(x) for x in lines[1].split(",")]
    assert row[1:7] == list(traj.states[0])
    assert all(float(x) == v for x, v in zip(lines[-1].split(","), [traj.t[-1], *traj.states[-1]]))
