"""Physical inputs and the derived coefficients of the effective dynamics.

Units: angular frequencies in rad/us and times in us, so a rate quoted as
``2*pi x 3.0 MHz`` is stored as ``2*pi*3.0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import ParameterError, SingularParameterError

TWO_PI = 2.0 * math.pi

# chi values at or above this trigger a ValidityWarning
CHI_WARN = 0.1

_SQRT_HALF = math.sqrt(0.5)
_OCTANT_COS_SIN = (
    (1.0, 0.0),
    (_SQRT_HALF, _SQRT_HALF),
    (0.0, 1.0),
    (-_SQRT_HALF, _SQRT_HALF),
    (-1.0, 0.0),
    (-_SQRT_HALF, -_SQRT_HALF),
    (0.0, -1.0),
    (_SQRT_HALF, -_SQRT_HALF),
)


class ValidityWarning(UserWarning):
    """Parameters leave the regime where the excited states can be eliminated."""


def cos_sin(angle: float) -> tuple[float, float]:
    """``(cos, sin)`` with exact values at multiples of pi/4.

    Symmetric polarizations and equatorial spin states then produce exactly
    equal amplitudes instead of values that differ in the last bit.
    """
    k = angle / (math.pi / 4)
    kr = round(k)
    if abs(k - kr) < 1e-12:
        return _OCTANT_COS_SIN[kr % 8]
    return math.cos(angle), math.sin(angle)


@dataclass(frozen=True)
class PhysicalParams:
    """Inputs of one simulation; defaults reproduce the reference parameter table."""

    omega_ud: float = TWO_PI * 1560.0
    delta_up: float = TWO_PI * 1000.0
    delta_dn: float = TWO_PI * 1000.0
    kappa: float = TWO_PI * 3.0
    g: float = TWO_PI * 1.5
    gamma: float = TWO_PI * 4.9
    eta: float = 0.6
    beta_in: float = 120.0
    vartheta: float = 0.0
    n_atoms: int = 100
    theta: float = 0.5 * math.pi
    phi: float = 0.0

    def __post_init__(self):
        problems = []
        if not self.kappa > 0:
            problems.append(f"kappa must be > 0 (got {self.kappa})")
        if not self.gamma >= 0:
            problems.append(f"gamma must be >= 0 (got {self.gamma})")
        if not self.g >= 0:
            problems.append(f"g must be >= 0 (got {self.g})")
        if not 0.0 <= self.eta <= 1.0:
            problems.append(f"eta must lie in [0, 1] (got {self.eta})")
        if not self.beta_in >= 0:
            problems.append(f"beta_in must be >= 0 (got {self.beta_in})")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            problems.append(f"n_atoms must be an integer >= 1 (got {self.n_atoms})")
        for name in ("omega_ud", "delta_up", "delta_dn", "vartheta", "theta", "phi"):
            if not math.isfinite(getattr(self, name)):
                problems.append(f"{name} must be finite")
        if problems:
            if self.kappa == 0:
                raise SingularParameterError("; ".join(problems))
            raise ParameterError("; ".join(problems))


@dataclass(frozen=True)
class DerivedParams:
    """Coefficients entering the collective equations.

    ``rate_deph_ind_*`` and ``rate_deph_coll_*`` are indexed by the chi they
    carry: ``rate_deph_coll_up = (4 g^2 / kappa) chi_up``.  ``light_shift`` is
    the Raman frequency shift ``2 (Delta_up chi_up - Delta_dn chi_dn)`` and
    ``frame_shift`` the rotating-frame frequency subtracted from it.
    """

    n_atoms: int
    beta_up: float
    beta_dn: float
    chi_up: float
    chi_dn: float
    xi_up: complex
    xi_dn: complex
    rate_pump: float
    rate_decay: float
    rate_deph_ind_up: float
    rate_deph_ind_dn: float
    rate_deph_coll_up: float
    rate_deph_coll_dn: float
    coop: float
    n_coop: float
    light_shift: float
    frame_shift: float

    @property
    def detuning_residual(self) -> float:
        """Coherence rotation frequency left after the frame shift."""
        return self.light_shift - self.frame_shift

    @property
    def coherence_damping(self) -> float:
        """Individual damping per unit of ``n_ud + n_du``: ``gamma (chi_up + chi_dn) / 2``."""
        return 0.5 * (self.rate_deph_ind_up + self.rate_deph_ind_dn) + 0.5 * (self.rate_pump + self.rate_decay)

    @property
    def collective_damping(self) -> float:
        """``(2 g^2 / kappa)(chi_up + chi_dn)``, per unit of ``(n_ud - n_du)^2``."""
        return 0.5 * (self.rate_deph_coll_up + self.rate_deph_coll_dn)

    @property
    def measurement_contrast(self) -> complex:
        return self.xi_dn - self.xi_up


def derive_params(p: PhysicalParams, frame_shift: float | None = None) -> DerivedParams:
    """Compute chi, xi, the Raman rates and the cooperativity from ``p``.

    ``frame_shift`` defaults to the light shift, which removes the
    Hamiltonian term from the collective equations altogether.
    """
    if not p.kappa > 0:
        raise SingularParameterError("kappa = 0 makes the collective rates singular")

    c, s = cos_sin(p.vartheta)
    beta_up = c * p.beta_in
    beta_dn = s * p.beta_in

    def chi(beta, delta):
        return p.g ** 2 * beta ** 2 / (delta ** 2 + p.gamma ** 2 / 4)

    chi_up = chi(beta_up, p.delta_up)
    chi_dn = chi(beta_dn, p.delta_dn)
    for name, value in (("chi_up", chi_up), ("chi_dn", chi_dn)):
        if value >= CHI_WARN:
            warnings.warn(
                f"{name} = {value:.3g} is not << 1; adiabatic elimination is questionable",
                ValidityWarning,
                stacklevel=2,
            )

    def xi(beta, delta):
        if p.beta_in == 0:
            return 0j
        return (beta ** 2 / p.beta_in) * math.sqrt(p.eta * p.kappa) * (2 * p.g ** 2 / p.kappa) / complex(
            delta, -p.gamma / 2
        )

    gamma = p.gamma
    coll = 4 * p.g ** 2 / p.kappa
    coop = coll / gamma if gamma > 0 else math.inf
    light_shift = 2 * (p.delta_up * chi_up - p.delta_dn * chi_dn)
    return DerivedParams(
        n_atoms=int(p.n_atoms),
        beta_up=beta_up,
        beta_dn=beta_dn,
        chi_up=chi_up,
        chi_dn=chi_dn,
        xi_up=xi(beta_up, p.delta_up),
        xi_dn=xi(beta_dn, p.delta_dn),
        rate_pump=gamma * chi_up / 3,
        rate_decay=gamma * chi_dn / 3,
        rate_deph_ind_up=2 * gamma * chi_up / 3,
        rate_deph_ind_dn=2 * gamma * chi_dn / 3,
        rate_deph_coll_up=coll * chi_up,
        rate_deph_coll_dn=coll * chi_dn,
        coop=coop,
        n_coop=p.n_atoms * coop,
        light_shift=light_shift,
        frame_shift=light_shift if frame_shift is None else float(frame_shift),
    )
