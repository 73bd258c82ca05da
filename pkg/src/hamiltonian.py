"""Spin Hamiltonian H = ∓S_z² − B·S_x as a real symmetric tridiagonal matrix.

The S_z basis is ordered by descending projection, m = S, S-1, ..., -S. S_x only
couples m to m±1, so one off-diagonal describes the whole matrix. The
reflection m -> -m commutes with H and splits it into an even and an odd block;
the two members of every zero-field doublet land in opposite blocks.
"""

import logging
from fractions import Fraction
from typing import Any, Self

from mpmath.ctx_mp import MPContext
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.dto import FLOOR_DIGITS, Anisotropy, FieldValue, Parity, SpinValue
from src.errors import InvalidPrecision, OutOfRange
from src.precision import working_context
from src.utils import to_mpf

logger = logging.getLogger("tunnelsplit.hamiltonian")


class TridiagonalSystem(BaseModel):
    """Diagonal and off-diagonal of a symmetric tridiagonal matrix at fixed precision."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    diag: tuple[Any, ...]
    offdiag: tuple[Any, ...]
    offdiag_squared: tuple[Any, ...] = Field(
        ..., description="Squares of the off-diagonal, rounded once from exact rationals."
    )
    parity_label: Parity
    anisotropy: Anisotropy
    digits: int = Field(..., ge=1)
    context: MPContext = Field(..., exclude=True, repr=False)

    @model_validator(mode="after")
    def validate_shape(self) -> Self:
        if not self.diag:
            raise ValueError("A tridiagonal system needs at least one entry.")
        if len(self.offdiag) != len(self.diag) - 1:
            raise ValueError("Off-diagonal must be one shorter than the diagonal.")
        if len(self.offdiag_squared) != len(self.offdiag):
            raise ValueError("Squared off-diagonal must match the off-diagonal.")
        return self

    @property
    def dim(self) -> int:
        return len(self.diag)

    def trace(self) -> Any:
        return self.context.fsum(self.diag)


def sx_radicand(spin: SpinValue, m: Fraction) -> int:
    """Four times S(S+1) - m(m-1), an exact non-negative integer.

    Raises:
        OutOfRange: if m is not a projection of the spin in [-S+1, S].
    """
    twice_m = 2 * Fraction(m)
    if twice_m.denominator != 1 or (int(twice_m) - spin.twice_s) % 2:
        raise OutOfRange(f"m={m} is not a projection of S={spin}.")
    twice_m_int = int(twice_m)
    if not -spin.twice_s + 2 <= twice_m_int <= spin.twice_s:
        raise OutOfRange(f"m={m} is outside [-S+1, S] for S={spin}.")
    return spin.twice_s * (spin.twice_s + 2) - twice_m_int * (twice_m_int - 2)


def sx_offdiag(spin: SpinValue, m: Fraction, ctx: MPContext) -> Any:
    """<m-1|S_x|m> = sqrt(S(S+1) - m(m-1)) / 2, with a single square root."""
    return ctx.sqrt(sx_radicand(spin, m)) / 4


def exact_diagonal(spin: SpinValue, kind: Anisotropy) -> list[Fraction]:
    """Exact diagonal ∓m² of the full system, m = S, ..., -S."""
    return [
        Fraction(kind.sign * (spin.twice_s - 2 * i) ** 2, 4) for i in range(spin.dim)
    ]


def exact_trace(spin: SpinValue, kind: Anisotropy) -> Fraction:
    """Trace ∓S(S+1)(2S+1)/3; S_x is traceless."""
    s = spin.value
    return kind.sign * s * (s + 1) * (2 * s + 1) / 3


def build_full(
    spin: SpinValue, field: FieldValue, kind: Anisotropy, digits: int
) -> TridiagonalSystem:
    """The whole (2S+1)-dimensional system in the S_z basis."""
    _check_digits(digits)
    ctx = working_context(digits)
    radicands = [
        sx_radicand(spin, Fraction(spin.twice_s - 2 * i, 2))
        for i in range(spin.dim - 1)
    ]
    return _assemble(
        ctx, digits, exact_diagonal(spin, kind), radicands, field, Parity.FULL, kind
    )


def build_parity_blocks(
    spin: SpinValue, field: FieldValue, kind: Anisotropy, digits: int
) -> tuple[TridiagonalSystem, TridiagonalSystem]:
    """Even and odd blocks in the basis (|m> ± |-m>)/sqrt(2), descending |m|.

    For integer S the even block also holds |0>, coupled to |±1> through sqrt(2)
    times the bare element. For half-integer S the |m| = 1/2 entry is shifted by
    ∓B(S+1/2)/2 in the even and odd block respectively.
    """
    _check_digits(digits)
    ctx = working_context(digits)
    projections = [Fraction(twice, 2) for twice in range(spin.twice_s, 0, -2)]
    diagonal = [kind.sign * mu * mu for mu in projections]
    radicands = [sx_radicand(spin, mu) for mu in projections[:-1]]

    if spin.is_integer:
        even_diagonal = [*diagonal, Fraction(0)]
        even_radicands = [*radicands, 2 * sx_radicand(spin, Fraction(1))]
        odd_diagonal, odd_radicands = diagonal, radicands
    else:
        shift = field.exact * Fraction(spin.twice_s + 1, 4)
        even_diagonal = [*diagonal[:-1], diagonal[-1] - shift]
        odd_diagonal = [*diagonal[:-1], diagonal[-1] + shift]
        even_radicands = odd_radicands = radicands

    even = _assemble(
        ctx, digits, even_diagonal, even_radicands, field, Parity.EVEN, kind
    )
    odd = _assemble(ctx, digits, odd_diagonal, odd_radicands, field, Parity.ODD, kind)
    logger.debug(
        "Parity blocks for S=%s B=%s: dims (%d, %d) at %d digits.",
        spin,
        field,
        even.dim,
        odd.dim,
        digits,
    )
    return even, odd


def _assemble(
    ctx: MPContext,
    digits: int,
    diagonal: list[Fraction],
    radicands: list[int],
    field: FieldValue,
    parity: Parity,
    kind: Anisotropy,
) -> TridiagonalSystem:
    # Each coupling is -B sqrt(r) / 4 with r an exact integer radicand
    b = to_mpf(ctx, field.exact)
    return TridiagonalSystem(
        diag=tuple(to_mpf(ctx, entry) for entry in diagonal),
        offdiag=tuple(-b * ctx.sqrt(r) / 4 for r in radicands),
        offdiag_squared=tuple(
            to_mpf(ctx, field.exact**2 * Fraction(r, 16)) for r in radicands
        ),
        parity_label=parity,
        anisotropy=kind,
        digits=digits,
        context=ctx,
    )


def _check_digits(digits: int) -> None:
    if digits < FLOOR_DIGITS:
        raise InvalidPrecision(
            f"Systems are built with at least {FLOOR_DIGITS} digits, got {digits}."
        )
