"""Doublet energies from the resummed Brillouin-Wigner secular equation.

For a doublet centred on the projection sigma the two energies solve

    E - eps_sigma - sum_m V_{sigma,m}^2 / (E - eps_m) = ±g(E),

where the sum runs over the outer neighbour sigma+1 and the inner neighbour
sigma-1 (absent for sigma = 1/2), and g(E) is the tunnelling amplitude: the
product of the 2 sigma couplings along the path sigma -> -sigma over the
energy denominators of its 2 sigma - 1 intermediate projections. The splitting
is the difference of the two branches; every other term is shared by both.
"""

import logging
from enum import StrEnum
from fractions import Fraction
from math import prod
from typing import Any, Literal, Self

from mpmath.ctx_mp import MPContext
from pydantic import BaseModel, ConfigDict, Field

from src.analytic import axis_level
from src.coefficients import leading_value
from src.config import settings
from src.dto import (
    Anisotropy,
    FieldValue,
    GapResult,
    LevelSpec,
    Method,
    PrecisionPolicy,
    SpinValue,
    unperturbed_energy,
)
from src.errors import (
    BracketFailure,
    InvalidField,
    NoConvergence,
    PrecisionExhausted,
    UnsupportedLevel,
)
from src.hamiltonian import sx_radicand
from src.precision import required_digits, working_context
from src.utils import render, to_mpf

logger = logging.getLogger("tunnelsplit.bw_solver")

# Half-width of the search interval around the unperturbed level
BRACKET_RADIUS = Fraction(1, 2)


class Branch(StrEnum):
    """Sign of the amplitude on the right-hand side."""

    PLUS = "+"
    MINUS = "-"

    @property
    def sign(self) -> int:
        return 1 if self is Branch.PLUS else -1


class BranchSolution(BaseModel):
    """Root of one branch of the secular equation."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    energy: Any
    iterations: int
    used_bisection: bool = False


class BwEquation(BaseModel):
    """Secular equation for one doublet, in easy-axis numbering."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    spin: SpinValue
    level: LevelSpec
    field: FieldValue
    truncation: Literal[2, 4] = 2
    digits: int = Field(..., ge=1)
    context: MPContext = Field(..., exclude=True, repr=False)

    @classmethod
    def build(
        cls,
        spin: SpinValue,
        level: LevelSpec,
        field: FieldValue,
        truncation: Literal[2, 4],
        digits: int,
    ) -> Self:
        """Validate the field and truncation, then attach a fresh context.

        Raises:
            InvalidField: at zero field.
            UnsupportedLevel: for truncation 4 away from the ground doublet.
        """
        if field.is_zero:
            raise InvalidField("The splitting vanishes at zero field; use B != 0.")
        if truncation == 4 and level.n != 0:
            raise UnsupportedLevel("Truncation 4 is defined for n = 0 only.")
        return cls(
            spin=spin,
            level=level,
            field=field,
            truncation=truncation,
            digits=digits,
            context=working_context(digits),
        )

    @property
    def center(self) -> Any:
        """Unperturbed energy eps_sigma."""
        return self._energy(self.level.sigma)

    def self_energy(self, energy: Any) -> Any:
        """Second-order shift from the neighbouring projections at energy E."""
        ctx = self.context
        sigma = self.level.sigma
        total = ctx.zero
        if sigma + 1 <= self.spin.value:
            total += self._coupling_squared(sigma + 1) / (
                energy - self._energy(sigma + 1)
            )
        if not self.level.is_half_sigma:
            total += self._coupling_squared(sigma) / (energy - self._energy(sigma - 1))
        return total

    def amplitude(self, energy: Any) -> Any:
        """Tunnelling amplitude g(E), with the excursion factor at truncation 4."""
        ctx = self.context
        sigma = self.level.sigma
        path = [sigma - k for k in range(self.level.sigma_twice)]
        # Couplings V = -B sqrt(r)/4 multiplied exactly, one square root at the end
        radicands = prod(sx_radicand(self.spin, m) for m in path)
        prefactor = (-self.field.exact) ** self.level.sigma_twice / Fraction(
            4**self.level.sigma_twice
        )
        numerator = to_mpf(ctx, prefactor) * ctx.sqrt(radicands)

        denominator = ctx.one
        for m in path[1:]:
            denominator *= energy - self._energy(m)
        value = numerator / denominator
        if self.truncation == 4:
            value *= 1 + self._excursions(energy)
        return value

    def residual(self, energy: Any, branch: Branch) -> Any:
        """L(E) - (±g(E)); zero at a root of the branch."""
        return (
            energy
            - self.center
            - self.self_energy(energy)
            - branch.sign * self.amplitude(energy)
        )

    def _excursions(self, energy: Any) -> Any:
        ctx = self.context
        sigma = self.level.sigma
        total = ctx.zero
        for k in range(2, self.level.sigma_twice):
            lower = sigma - k
            upper = lower + 1
            total += self._coupling_squared(upper) / (
                (energy - self._energy(lower)) * (energy - self._energy(upper))
            )
        return total

    def _energy(self, m: Fraction) -> Any:
        return to_mpf(self.context, unperturbed_energy(m))

    def _coupling_squared(self, m: Fraction) -> Any:
        """V^2 between m and m-1, rounded once from B^2 r / 16."""
        return to_mpf(
            self.context,
            self.field.exact**2 * Fraction(sx_radicand(self.spin, m), 16),
        )


def solve_branch(
    eq: BwEquation,
    branch: Branch,
    tol: Any,
    max_iterations: int | None = None,
    damping: float | None = None,
) -> BranchSolution:
    """Solve one branch by damped fixed-point iteration, falling back to bisection.

    The iteration E <- E + damping (eps + self_energy(E) ± g(E) - E) starts at
    eps_sigma and converges once successive iterates differ by at most
    tol max(1, |E|). If an iterate leaves the bracket eps_sigma ± 1/2, the root
    is bisected there instead.

    Raises:
        PrecisionExhausted: if tol is below 10^(5 - digits).
        NoConvergence: at the iteration cap.
        BracketFailure: if the residual has no sign change across the bracket.
    """
    ctx = eq.context
    max_iterations = max_iterations or settings.bw_max_iterations
    step = ctx.mpf(damping if damping is not None else settings.bw_damping)
    tolerance = ctx.mpf(tol)
    floor = ctx.mpf(10) ** (5 - eq.digits)
    if tolerance < floor:
        raise PrecisionExhausted(
            f"Tolerance {ctx.nstr(tolerance, 3)} is below what {eq.digits} "
            "digits can resolve."
        )

    center = eq.center
    radius = to_mpf(ctx, BRACKET_RADIUS)
    lower, upper = center - radius, center + radius

    energy = center
    for iteration in range(1, max_iterations + 1):
        target = center + eq.self_energy(energy) + branch.sign * eq.amplitude(energy)
        update = energy + step * (target - energy)
        if not lower < update < upper:
            logger.debug(
                "Branch %s left the bracket after %d iterations; bisecting.",
                branch,
                iteration,
            )
            return _bisect(eq, branch, lower, upper, tolerance, max_iterations)
        if abs(update - energy) <= tolerance * max(ctx.one, abs(update)):
            return BranchSolution(energy=update, iterations=iteration)
        energy = update

    raise NoConvergence(
        f"Branch {branch} did not converge in {max_iterations} iterations."
    )


def default_tolerance(eq: BwEquation) -> Any:
    """Relative tolerance that resolves the splitting to about twelve digits."""
    ctx = eq.context
    estimate = to_mpf(ctx, leading_value(eq.spin, eq.level, eq.field))
    scale = max(ctx.one, to_mpf(ctx, eq.level.sigma**2))
    return max(estimate * ctx.mpf("1e-12") / scale, ctx.mpf(10) ** (5 - eq.digits))


def bw_gap(
    spin: SpinValue,
    level: LevelSpec,
    field: FieldValue,
    tol: Any = None,
    anisotropy: Anisotropy = Anisotropy.EASY_AXIS,
    policy: PrecisionPolicy | None = None,
    truncation: Literal[2, 4] = 2,
) -> GapResult:
    """Splitting as the difference of the two branch energies."""
    policy = policy or PrecisionPolicy()
    if field.is_zero:
        raise InvalidField("The splitting vanishes at zero field; use B != 0.")
    target = axis_level(spin, level, anisotropy)
    digits = required_digits(spin, field, target, policy)
    eq = BwEquation.build(spin, target, field, truncation, digits)
    ctx = eq.context
    tolerance = default_tolerance(eq) if tol is None else ctx.mpf(tol)

    plus = solve_branch(eq, Branch.PLUS, tolerance)
    minus = solve_branch(eq, Branch.MINUS, tolerance)
    logger.debug(
        "BW branches for S=%s n=%d B=%s converged in %d and %d iterations.",
        spin,
        target.n,
        field,
        plus.iterations,
        minus.iterations,
    )
    return GapResult(
        spin=spin,
        level=level,
        field=field,
        method=Method.BW,
        value=render(ctx, abs(plus.energy - minus.energy), digits),
        digits_used=digits,
        anisotropy=anisotropy,
        diagnostics={
            "iterations_plus": str(plus.iterations),
            "iterations_minus": str(minus.iterations),
            "bisection_fallback": str(plus.used_bisection or minus.used_bisection).lower(),
            "truncation": str(truncation),
            "tolerance": ctx.nstr(tolerance, 3),
        },
    )


def _bisect(
    eq: BwEquation,
    branch: Branch,
    lower: Any,
    upper: Any,
    tolerance: Any,
    max_iterations: int,
) -> BranchSolution:
    ctx = eq.context
    low_value = eq.residual(lower, branch)
    high_value = eq.residual(upper, branch)
    if low_value * high_value > 0:
        raise BracketFailure(
            f"No sign change for branch {branch} in [{ctx.nstr(lower, 8)}, "
            f"{ctx.nstr(upper, 8)}]; the doublet has left the tunnelling regime."
        )

    for iteration in range(1, max_iterations + 1):
        middle = (lower + upper) / 2
        if upper - lower <= tolerance * max(ctx.one, abs(middle)):
            return BranchSolution(
                energy=middle, iterations=iteration, used_bisection=True
            )
        middle_value = eq.residual(middle, branch)
        if (middle_value < 0) == (low_value < 0):
            lower, low_value = middle, middle_value
        else:
            upper = middle

    raise NoConvergence(
        f"Bisection for branch {branch} did not converge in {max_iterations} steps."
    )
