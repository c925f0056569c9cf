import math
import random
from fractions import Fraction

import pytest

from qdexciton.errors import DomainError
from qdexciton.model import (
    PhysicalParams,
    QuantumNumbers,
    claimed_energy,
    cm_energy,
    corrected_energy,
    implied_energy,
    reduced_mass,
    to_scaled,
)

UNIT = PhysicalParams(m_e=2.0, m_h=2.0, omega0=1.0, epsilon=1.0)  # mu = hbar = omega0 = eps = e2 = 1


def random_params(rng):
    return PhysicalParams(
        m_e=rng.uniform(0.01, 3),
        m_h=rng.uniform(0.01, 3),
        omega0=rng.uniform(0.05, 5),
        epsilon=rng.uniform(1, 20),
        hbar=rng.uniform(0.5, 2),
        e2=rng.uniform(0, 3),
    )


def test_reduced_mass_examples():
    assert reduced_mass(1, 1) == 0.5
    assert reduced_mass(0.3, 1e9) == pytest.approx(0.3, rel=1e-8)
    expected = Fraction("0.067") * Fraction("0.45") / Fraction("0.517")
    assert reduced_mass(0.067, 0.45) == pytest.approx(float(expected), rel=1e-15)
    assert reduced_mass(0.067, 0.45) == pytest.approx(0.05831721470019342, rel=1e-12)


@pytest.mark.parametrize("m_e,m_h", [(0, 1), (1, -2), (-1, -1)])
def test_reduced_mass_rejects_nonpositive(m_e, m_h):
    with pytest.raises(DomainError):
        reduced_mass(m_e, m_h)


def test_reduced_mass_symmetric_and_bounded():
    rng = random.Random(7)
    for _ in range(50):
        a, b = rng.uniform(1e-3, 10), rng.uniform(1e-3, 10)
        assert reduced_mass(a, b) == pytest.approx(reduced_mass(b, a), rel=1e-15)
        assert reduced_mass(a, b) <= min(a, b)


def test_physical_params_validation():
    with pytest.raises(DomainError):
        PhysicalParams(1, 1, 0, 1)
    with pytest.raises(DomainError):
        PhysicalParams(1, 1, 1, 1, e2=-1)
    PhysicalParams(1, 1, 1, 1, e2=0)


def test_to_scaled_examples():
    d, s = to_scaled(PhysicalParams(1.0, 1e12, 1.0, 1.0, e2=0.0))
    assert s.g == 0
    d, s = to_scaled(UNIT)
    assert (d.mu, d.gamma, d.s, s.g) == (1.0, 2.0, 1.0, 2.0)
    assert d.beta == 1.0
    assert d.hbar_omega == pytest.approx(1.0)


def test_scaling_round_trip_and_consistency():
    rng = random.Random(11)
    for _ in range(10):
        p = random_params(rng)
        d, s = to_scaled(p)
        assert d.s == pytest.approx(d.mu * p.omega0 / p.hbar, rel=1e-14)
        assert d.s == pytest.approx(math.sqrt(d.beta), rel=1e-14)
        assert s.g == pytest.approx(d.gamma / math.sqrt(d.s), rel=1e-14)
        assert s.energy(4.0) == pytest.approx(2.0 * p.hbar * p.omega0, rel=1e-14)
        # abar obtained through hbar*omega0 equals raw alpha / sqrt(beta)
        E = rng.uniform(-3, 10)
        alpha_raw = d.alpha_scale * E
        assert s.alpha_bar(E) == pytest.approx(alpha_raw / math.sqrt(d.beta), rel=1e-12)
        assert d.hbar_omega == pytest.approx(p.hbar * p.omega0, rel=1e-14)


def test_quantum_numbers_fold_sign():
    q = QuantumNumbers(-3, 1)
    assert q.m == 3 and q.signed_m == -3
    with pytest.raises(DomainError):
        QuantumNumbers(0, -1)


def test_claimed_energy_examples():
    p0 = PhysicalParams(2.0, 2.0, 1.0, 1.0, e2=0.0)
    for m in range(4):
        assert claimed_energy(m, p0) == 2 * (m + 1)
    assert claimed_energy(0, UNIT) == pytest.approx(6.0)
    assert claimed_energy(1, UNIT) == pytest.approx(4 + 4 / 3)


def test_implied_energy_examples():
    d0, _ = to_scaled(PhysicalParams(2.0, 2.0, 1.0, 1.0, e2=0.0))
    for m in range(4):
        assert implied_energy(m, 0, d0) == pytest.approx(m + 1)
    d, _ = to_scaled(UNIT)
    # hand evaluation: abar = 2 + g^2 with g = 2, E = abar/2 = 3
    assert implied_energy(0, 0, d) == pytest.approx(3.0)
    assert implied_energy(0, 0, d) != pytest.approx(claimed_energy(0, UNIT))


def test_printed_and_implied_energies_differ_by_documented_ratio():
    """Printed = 2*implied when eps = 1; in general the Coulomb parts differ by a factor eps."""
    rng = random.Random(3)
    for _ in range(10):
        p = random_params(rng)
        d, _ = to_scaled(p)
        for m in range(3):
            hw = p.hbar * p.omega0
            printed_coulomb = claimed_energy(m, p) - 2 * hw * (m + 1)
            implied_coulomb = 2 * implied_energy(m, 0, d) - 2 * hw * (m + 1)
            if p.e2 > 0.05:
                assert printed_coulomb / implied_coulomb == pytest.approx(p.epsilon, rel=1e-10)
    p1 = PhysicalParams(0.3, 0.7, 2.0, 1.0, hbar=1.3, e2=0.8)
    d1, _ = to_scaled(p1)
    assert claimed_energy(2, p1) == pytest.approx(2 * implied_energy(2, 0, d1), rel=1e-13)


def test_corrected_energy():
    assert corrected_energy(0, 1.0, 1.0) == 2
    assert corrected_energy(1, 1.0, 1.0) == 3
    assert corrected_energy(0, 0.5, 1.0) == 1
    assert corrected_energy(2, 1.0, 1.0, degree=2) == 5


def test_corrected_energy_ignores_coupling_and_masses():
    rng = random.Random(5)
    for _ in range(10):
        p = random_params(rng)
        assert corrected_energy(1, p.omega0, p.hbar) == pytest.approx(3 * p.hbar * p.omega0)


def test_cm_energy_ladder():
    assert cm_energy(0, 0, 2.0, 1.0) == 1
    assert cm_energy(1, 0, 2.0, 1.0) == 3
    assert cm_energy(0, 2, 2.0, 1.0) == 3
    assert cm_energy(0, -2, 7.0, 1.0) == 3
    with pytest.raises(DomainError):
        cm_energy(-1, 0, 1.0, 1.0)
