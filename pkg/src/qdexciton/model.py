"""Physical parameters of the exciton model and their dimensionless reduction.

The two-body Hamiltonian (electron + hole in a 2D parabolic dot with a
screened Coulomb attraction) separates into a centre-of-mass oscillator and a
relative-motion problem.  With ``s = mu*omega0/hbar`` as inverse squared
oscillator length, the relative radial equation becomes, in the scaled
variable ``rho = sqrt(s) * r``::

    phi'' + phi'/rho - (m^2/rho^2) phi + (abar - rho^2 + g/rho) phi = 0

with ``abar = 2 E_r / (hbar omega0)`` and ``g = gamma / sqrt(s)``.  Everything
downstream works with the single coupling ``g``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError


@dataclass(frozen=True)
class PhysicalParams:
    """Electron/hole masses, confinement and screening.

    Masses are in electron-mass units and ``omega0`` in energy/hbar units of
    whatever system ``hbar`` and ``e2`` are expressed in (default: all ones).
    """

    m_e: float
    m_h: float
    omega0: float
    epsilon: float
    hbar: float = 1.0
    e2: float = 1.0

    def __post_init__(self):
        for name in ("m_e", "m_h", "omega0", "epsilon", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a positive finite number, got {value!r}")
        if not (math.isfinite(self.e2) and self.e2 >= 0):
            raise DomainError(f"e2 must be non-negative, got {self.e2!r}")


@dataclass(frozen=True)
class DerivedParams:
    mu: float
    M: float
    alpha_scale: float  # 2 mu / hbar^2: multiplies E_r to give alpha
    beta: float
    gamma: float
    s: float

    @property
    def hbar_omega(self) -> float:
        """Confinement quantum hbar*omega0, recovered as 2 s / alpha_scale."""
        return 2.0 * self.s / self.alpha_scale


@dataclass(frozen=True)
class ScaledParams:
    g: float
    energy_unit: float  # hbar*omega0
    length_unit: float  # sqrt(hbar / (mu omega0))

    def energy(self, alpha_bar: float) -> float:
        """Relative-motion energy E_r for a dimensionless eigenvalue."""
        return alpha_bar * self.energy_unit / 2.0

    def alpha_bar(self, energy: float) -> float:
        return 2.0 * energy / self.energy_unit


@dataclass(frozen=True)
class QuantumNumbers:
    """Angular number ``m`` (stored as ``|m|``) and radial family index ``n_r``.

    The radial problem only sees ``m**2`` and the regular solution behaves as
    ``r**|m|``, so negative ``m`` is folded onto its absolute value.
    """

    m: int
    n_r: int = 0
    signed_m: int = field(default=0, repr=False, compare=False)

    def __post_init__(self):
        if self.n_r < 0:
            raise DomainError(f"n_r must be >= 0, got {self.n_r}")
        object.__setattr__(self, "signed_m", int(self.m))
        object.__setattr__(self, "m", abs(int(self.m)))


def reduced_mass(m_e: float, m_h: float) -> float:
    if not (m_e > 0 and m_h > 0):
        raise DomainError(f"masses must be positive, got m_e={m_e!r}, m_h={m_h!r}")
    return m_e * m_h / (m_e + m_h)


def to_scaled(p: PhysicalParams) -> tuple[DerivedParams, ScaledParams]:
    """Reduce physical parameters to the radial coefficients and coupling ``g``."""
    mu = reduced_mass(p.m_e, p.m_h)
    M = p.m_e + p.m_h
    alpha_scale = 2.0 * mu / p.hbar**2
    beta = (mu * p.omega0 / p.hbar) ** 2
    gamma = 2.0 * mu * p.e2 / (p.hbar**2 * p.epsilon)
    s = mu * p.omega0 / p.hbar
    derived = DerivedParams(mu=mu, M=M, alpha_scale=alpha_scale, beta=beta, gamma=gamma, s=s)
    scaled = ScaledParams(
        g=gamma / math.sqrt(s),
        energy_unit=p.hbar * p.omega0,
        length_unit=1.0 / math.sqrt(s),
    )
    return derived, scaled


def claimed_energy(m: int, p: PhysicalParams) -> float:
    """Closed-form energy proposed alongside the linear trial function.

    ``2 hw (m+1) + 4 mu e^4 / (eps hbar^2 (2m+1))``, reproduced verbatim
    (factor of two and single power of the dielectric constant included) so
    it can be compared against the other routes.
    """
    m = _check_m(m)
    mu = reduced_mass(p.m_e, p.m_h)
    return 2.0 * p.hbar * p.omega0 * (m + 1) + 4.0 * mu * p.e2**2 / (
        p.epsilon * p.hbar**2 * (2 * m + 1)
    )


def implied_energy(m: int, n_r: int, d: DerivedParams) -> float:
    """Energy implied by forcing only ``a_{n_r+2} = 0`` in the series.

    For ``n_r = 0`` this is ``hw (m+1) + hbar^2 gamma^2 / (2 mu (2m+1))``; for
    larger ``n_r`` the condition is implicit and is solved by damped fixed
    point iteration (see :func:`qdexciton.qes.single_condition_alpha`).
    """
    from .qes import single_condition_alpha

    m = _check_m(m)
    if n_r < 0:
        raise DomainError(f"n_r must be >= 0, got {n_r}")
    g = d.gamma / math.sqrt(d.s)
    alpha_bar = single_condition_alpha(m, n_r, g)
    return float(alpha_bar) * d.hbar_omega / 2.0


def corrected_energy(m: int, omega0: float, hbar: float = 1.0, degree: int = 1) -> float:
    """Energy ``hbar omega0 (m + degree + 1)`` of a genuinely terminating state.

    ``degree=1`` is the lowest non-trivial quasi-exact state, ``hbar omega0 (m+2)``.
    It is independent of the masses, the screening and the coupling; the
    coupling is instead pinned by the state.
    """
    m = _check_m(m)
    if degree < 0:
        raise DomainError(f"degree must be >= 0, got {degree}")
    return hbar * omega0 * (m + degree + 1)


def cm_energy(n_R: int, m_R: int, M: float, omega0: float, hbar: float = 1.0) -> float:
    """Centre-of-mass level of the 2D isotropic oscillator (mass-independent)."""
    if n_R < 0:
        raise DomainError(f"n_R must be >= 0, got {n_R}")
    if M <= 0:
        raise DomainError(f"total mass must be positive, got {M!r}")
    return hbar * omega0 * (2 * n_R + abs(m_R) + 1)


def _check_m(m: int) -> int:
    if m < 0:
        raise DomainError(f"m must be >= 0 (use |m|), got {m}")
    return int(m)
