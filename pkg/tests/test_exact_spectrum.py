import random

import pytest

from src.dto import (
    Anisotropy,
    FieldValue,
    LevelSpec,
    Method,
    Parity,
    SpinValue,
    parse_precision,
)
from src.errors import DoubletBroken, InvalidField, OutOfRange, PrecisionExhausted
from src.exact_spectrum import (
    bracket_eigenvalue,
    doublet_indices,
    eigenvalues,
    exact_gap,
    gershgorin_bounds,
    measure_doublet,
    merge_spectra,
    spectrum,
    sturm_count,
)
from src.hamiltonian import TridiagonalSystem, build_full, build_parity_blocks
from src.precision import working_context


def spin(twice_s: int) -> SpinValue:
    return SpinValue(twice_s=twice_s)


def level(twice_s: int, n: int) -> LevelSpec:
    return LevelSpec.for_spin(spin(twice_s), n)


def synthetic(diag: list[str], offdiag: list[str], parity: Parity) -> TridiagonalSystem:
    ctx = working_context(40)
    return TridiagonalSystem(
        diag=tuple(ctx.mpf(d) for d in diag),
        offdiag=tuple(ctx.mpf(b) for b in offdiag),
        offdiag_squared=tuple(ctx.mpf(b) ** 2 for b in offdiag),
        parity_label=parity,
        anisotropy=Anisotropy.EASY_AXIS,
        digits=40,
        context=ctx,
    )


@pytest.fixture
def spin_one() -> TridiagonalSystem:
    return build_full(spin(2), FieldValue.of("0.5"), Anisotropy.EASY_AXIS, 40)


class TestSturmCount:
    def test_counts_below_zero(self, spin_one: TridiagonalSystem) -> None:
        assert sturm_count(spin_one, 0) == 2

    def test_counts_at_the_bounds(self, spin_one: TridiagonalSystem) -> None:
        lower, upper = gershgorin_bounds(spin_one)
        assert sturm_count(spin_one, lower - 1) == 0
        assert sturm_count(spin_one, upper + 1) == 3

    def test_count_at_an_eigenvalue_is_deterministic(
        self, spin_one: TridiagonalSystem
    ) -> None:
        # -1 is an eigenvalue; the zero pivot there is replaced by -tiny
        first = sturm_count(spin_one, -1)
        assert first in (1, 2)
        assert all(sturm_count(spin_one, -1) == first for _ in range(3))

    def test_monotone(self) -> None:
        system = build_full(spin(9), FieldValue.of("0.4"), Anisotropy.EASY_AXIS, 40)
        ctx = system.context
        lower, upper = gershgorin_bounds(system)
        counts = [
            sturm_count(system, lower + (upper - lower) * ctx.mpf(i) / 200)
            for i in range(201)
        ]
        assert counts == sorted(counts)
        assert counts[-1] == system.dim


class TestEigenvalues:
    def test_spin_one_closed_form(self, spin_one: TridiagonalSystem) -> None:
        ctx = spin_one.context
        result = eigenvalues(spin_one, ctx.mpf(10) ** -35)
        expected = [(-1 - ctx.sqrt(2)) / 2, ctx.mpf(-1), (-1 + ctx.sqrt(2)) / 2]

        assert len(result) == 3
        for value, exact in zip(result.values, expected):
            assert abs(value - exact) <= result.max_interval_width
        assert result.max_interval_width <= ctx.mpf(10) ** -35

    def test_spin_half_closed_form(self) -> None:
        system = build_full(spin(1), FieldValue.of("0.3"), Anisotropy.EASY_AXIS, 40)
        ctx = system.context
        result = eigenvalues(system, ctx.mpf(10) ** -35)
        assert abs(result.values[0] + ctx.mpf("0.4")) < ctx.mpf(10) ** -34
        assert abs(result.values[1] + ctx.mpf("0.1")) < ctx.mpf(10) ** -34

    def test_trace(self) -> None:
        system = build_full(spin(2), FieldValue.of("0.9"), Anisotropy.EASY_AXIS, 40)
        ctx = system.context
        width = ctx.mpf(10) ** -30
        assert abs(ctx.fsum(eigenvalues(system, width).values) + 2) <= 10 * width

    def test_width_below_precision_floor(self, spin_one: TridiagonalSystem) -> None:
        with pytest.raises(PrecisionExhausted):
            eigenvalues(spin_one, spin_one.context.mpf(10) ** -45)

    def test_index_out_of_range(self, spin_one: TridiagonalSystem) -> None:
        with pytest.raises(OutOfRange):
            bracket_eigenvalue(spin_one, 3, spin_one.context.mpf(10) ** -20)

    def test_merge_keeps_parity_labels(self) -> None:
        even, odd = build_parity_blocks(
            spin(2), FieldValue.of("0.5"), Anisotropy.EASY_AXIS, 40
        )
        width = even.context.mpf(10) ** -30
        merged = merge_spectra(eigenvalues(even, width), eigenvalues(odd, width))
        assert merged.parity_labels == (Parity.EVEN, Parity.ODD, Parity.EVEN)
        assert list(merged.values) == sorted(merged.values)


class TestDoublet:
    def test_adjacent_pair(self) -> None:
        even = synthetic(["0", "5"], ["0.1"], Parity.EVEN)
        odd = synthetic(["0.2", "7"], ["0.1"], Parity.ODD)
        result = measure_doublet(even, odd, 0, 0, even.context.mpf(10) ** -30)
        assert result.gap > 0
        assert result.uncertainty <= 2 * even.context.mpf(10) ** -30

    def test_broken_pair(self) -> None:
        even = synthetic(["0", "0.1"], ["0"], Parity.EVEN)
        odd = synthetic(["1", "2"], ["0"], Parity.ODD)
        with pytest.raises(DoubletBroken, match="not adjacent"):
            measure_doublet(even, odd, 0, 0, even.context.mpf(10) ** -30)

    @pytest.mark.parametrize(
        ("twice_s", "kind", "indices"),
        [
            (4, Anisotropy.EASY_AXIS, (1, 1)),
            (4, Anisotropy.EASY_PLANE, (2, 1)),
            (5, Anisotropy.EASY_PLANE, (1, 1)),
        ],
    )
    def test_doublet_indices(
        self, twice_s: int, kind: Anisotropy, indices: tuple[int, int]
    ) -> None:
        assert doublet_indices(spin(twice_s), level(twice_s, 1), kind) == indices


class TestExactGap:
    def test_spin_one(self) -> None:
        result = exact_gap(spin(2), FieldValue.of("0.5"), level(2, 0))
        assert result.method is Method.EXACT
        ctx = working_context(result.digits_used)
        assert abs(ctx.mpf(result.value) - (ctx.sqrt(2) - 1) / 2) < ctx.mpf("1e-15")
        assert result.diagnostics["block_dims"] == "2,1"

    def test_spin_half_is_the_field(self) -> None:
        result = exact_gap(spin(1), FieldValue.of("0.37"), level(1, 0))
        ctx = working_context(result.digits_used)
        assert abs(ctx.mpf(result.value) - ctx.mpf("0.37")) < ctx.mpf("1e-15")

    def test_spin_two_excited_doublet(self) -> None:
        result = exact_gap(spin(4), FieldValue.of("0.01"), level(4, 1))
        assert result.value.startswith("0.00029991")

    def test_zero_field_is_rejected(self) -> None:
        with pytest.raises(InvalidField):
            exact_gap(spin(2), FieldValue.of("0"), level(2, 0))

    def test_certified_width(self) -> None:
        result = exact_gap(spin(6), FieldValue.of("0.05"), level(6, 0))
        assert float(result.diagnostics["certified_rel_width"]) <= 1e-10

    def test_doubling_digits_changes_little(self) -> None:
        b = FieldValue.of("0.1")
        base = exact_gap(spin(8), b, level(8, 0))
        doubled = exact_gap(
            spin(8), b, level(8, 0), policy=parse_precision(f"digits:{2 * base.digits_used}")
        )
        ctx = working_context(2 * base.digits_used)
        assert abs(ctx.mpf(doubled.value) / ctx.mpf(base.value) - 1) <= ctx.mpf("1e-10")

    def test_field_sign_symmetry(self) -> None:
        rng = random.Random(7)
        for _ in range(5):
            twice_s = rng.randint(1, 8)
            b = FieldValue.of(f"0.0{rng.randint(1, 9)}")
            n = rng.randrange(spin(twice_s).doublet_count)
            ctx = working_context(60)
            plus = ctx.mpf(exact_gap(spin(twice_s), b, level(twice_s, n)).value)
            minus = ctx.mpf(exact_gap(spin(twice_s), b.negated(), level(twice_s, n)).value)
            assert abs(plus / minus - 1) <= ctx.mpf("1e-10")

    @pytest.mark.parametrize("twice_s", [4, 5, 6])
    def test_easy_plane_gaps_are_renumbered(self, twice_s: int) -> None:
        b = FieldValue.of("0.05")
        count = spin(twice_s).doublet_count
        ctx = working_context(60)
        for n in range(count):
            plane = exact_gap(spin(twice_s), b, level(twice_s, n), Anisotropy.EASY_PLANE)
            axis = exact_gap(spin(twice_s), b, level(twice_s, count - 1 - n))
            assert abs(ctx.mpf(plane.value) / ctx.mpf(axis.value) - 1) <= ctx.mpf(
                "1e-10"
            )


class TestSpectrum:
    def test_spin_one(self) -> None:
        report = spectrum(spin(2), FieldValue.of("0.5"))
        values = report.rendered_values()

        assert values[0].startswith("-1.20710678")
        ctx = working_context(report.digits)
        assert abs(report.eigenvalues.values[1] + 1) < ctx.mpf("1e-15")
        assert values[2].startswith("0.20710678")
        assert report.eigenvalues.parity_labels == (Parity.EVEN, Parity.ODD, Parity.EVEN)
        assert [row.adjacent for row in report.doublets] == [True]

    def test_spin_half(self) -> None:
        report = spectrum(spin(1), FieldValue.of("0.3"))
        ctx = working_context(report.digits)
        low, high = report.eigenvalues.values
        assert abs(low + ctx.mpf("0.4")) < ctx.mpf("1e-15")
        assert abs(high + ctx.mpf("0.1")) < ctx.mpf("1e-15")

    def test_trace(self) -> None:
        report = spectrum(spin(4), FieldValue.of("0.1"))
        ctx = working_context(report.digits)
        assert len(report.eigenvalues) == 5
        width = report.eigenvalues.max_interval_width
        assert abs(ctx.fsum(report.eigenvalues.values) + 10) <= 10 * width

    @pytest.mark.parametrize("twice_s", range(1, 11))
    def test_small_field_pairs_are_adjacent(self, twice_s: int) -> None:
        report = spectrum(spin(twice_s), FieldValue.of("0.1"))
        assert len(report.doublets) == spin(twice_s).doublet_count
        assert all(row.adjacent for row in report.doublets)

    def test_zero_field(self) -> None:
        report = spectrum(spin(2), FieldValue.of("0"))
        ctx = working_context(report.digits)
        assert report.digits == 40
        expected = [-1, -1, 0]
        assert all(
            abs(value - exact) < ctx.mpf("1e-30")
            for value, exact in zip(report.eigenvalues.values, expected)
        )
