from fractions import Fraction

import numpy as np
import pytest
from biasamp import (
    MetricError,
    PredictionRecord,
    PredictionTable,
    accuracy,
    bias_amp,
    conditional_rates,
    confidence_interval,
    direction_y,
    disaggregated_accuracy,
    ece,
    spearman,
)

from .conftest import calibration_records, random_table, twenty_records


def rec(t: int, pred: int, group: str, confidence: float = 0.9) -> PredictionRecord:
    return PredictionRecord(
        true_class=t,  # type: ignore[arg-type]
        predicted_class=pred,  # type: ignore[arg-type]
        confidence=confidence,
        group=group,
    )


def dampened_records() -> list[PredictionRecord]:
    # Same labels as twenty_records(), with the prediction errors mirrored
    return [
        *[rec(1, 1, "a") for _ in range(7)],
        rec(1, -1, "a"),
        rec(-1, -1, "a"),
        rec(-1, -1, "a"),
        rec(1, 1, "b"),
        rec(1, 1, "b"),
        rec(-1, 1, "b"),
        *[rec(-1, -1, "b") for _ in range(7)],
    ]


def perfect(records):
    return [r.model_copy(update={"predicted_class": r.true_class}) for r in records]


def test_conditional_rates():
    rates = conditional_rates(twenty_records())
    assert rates[("a", 1)].dataset_rate == 0.8
    assert rates[("a", 1)].prediction_rate == 0.9
    assert rates[("b", -1)].dataset_rate == 0.8
    for a in ("a", "b"):
        assert rates[(a, 1)].dataset_rate + rates[(a, -1)].dataset_rate == 1.0
        assert rates[(a, 1)].prediction_rate + rates[(a, -1)].prediction_rate == 1.0


def test_conditional_rates_all_positive_group():
    records = [rec(1, 1, "a"), rec(1, 1, "a"), rec(-1, -1, "b")]
    assert conditional_rates(records)[("a", 1)].dataset_rate == 1.0


def test_conditional_rates_empty_group():
    with pytest.raises(MetricError) as e:
        conditional_rates([rec(1, 1, "a"), rec(-1, 1, "a")])
    assert e.value.group == "b"


def test_unexpected_group():
    with pytest.raises(MetricError, match="unexpected group"):
        bias_amp([*twenty_records(), rec(1, 1, "c")])


def test_direction_y():
    records = twenty_records()
    assert direction_y(records, "a", 1) == 1
    assert direction_y(records, "a", -1) == 0
    assert direction_y(records, "b", -1) == 1
    assert direction_y(records, "a", 1) == direction_y(records, "b", -1)

    independent = [rec(1, 1, "a"), rec(-1, 1, "a"), rec(1, 1, "b"), rec(-1, 1, "b")]
    for a in ("a", "b"):
        for t in (1, -1):
            assert direction_y(independent, a, t) == 0


def test_bias_amp_fixture():
    result = bias_amp(twenty_records())
    assert result.value == 0.1
    assert [(c.group, c.class_label) for c in result.cells] == [
        ("a", 1),
        ("a", -1),
        ("b", 1),
        ("b", -1),
    ]
    assert result.cell("a", 1).delta == pytest.approx(0.1, abs=1e-15)
    assert result.cell("a", -1).delta == pytest.approx(-0.1, abs=1e-15)
    assert result.flagged_cells == []


def test_bias_amp_dampening_is_negative():
    amplified = bias_amp(twenty_records())
    dampened = bias_amp(dampened_records())
    assert dampened.value == -0.1
    for a, d in zip(amplified.cells, dampened.cells):
        assert d.delta == pytest.approx(-a.delta, abs=1e-15)


def test_bias_amp_is_zero_for_perfect_predictions():
    assert bias_amp(perfect(twenty_records())).value == 0.0

    rng = np.random.default_rng(0)
    base = [rec(1, 1, "a"), rec(-1, -1, "a"), rec(1, 1, "b"), rec(-1, -1, "b")]
    for _ in range(100):
        table = random_table(rng, int(rng.integers(1, 60)))
        records = perfect([*base, *table])
        assert bias_amp(records).value == 0.0


def test_bias_amp_is_invariant_to_duplication():
    records = twenty_records()
    assert bias_amp(records * 2).value == bias_amp(records).value


def test_bias_amp_flags_never_predicted_cells():
    records = [rec(1, -1, "a"), rec(-1, -1, "a"), rec(1, 1, "b"), rec(-1, -1, "b")]
    assert bias_amp(records).flagged_cells == [("a", 1)]


def test_bias_amp_requires_both_classes():
    with pytest.raises(MetricError, match="class -1"):
        bias_amp([rec(1, 1, "a"), rec(1, 1, "b")])


def oracle_bias_amp(records) -> float:
    """
    Brute-force directional bias amplification by direct enumeration.
    """
    groups = ("a", "b")
    classes = (1, -1)
    n = len(records)
    total = Fraction(0)
    for a in groups:
        in_a = [r for r in records if r.group == a]
        for t in classes:
            p_ta = Fraction(sum(1 for r in in_a if r.true_class == t), n)
            p_t = Fraction(sum(1 for r in records if r.true_class == t), n)
            p_a = Fraction(len(in_a), n)
            y = 1 if p_ta > p_t * p_a else 0
            truth = Fraction(sum(1 for r in in_a if r.true_class == t), len(in_a))
            pred = Fraction(sum(1 for r in in_a if r.predicted_class == t), len(in_a))
            delta = pred - truth
            total += y * delta - (1 - y) * delta
    return float(total / 4)


def oracle_ece(records, bins: int = 15) -> float:
    n = len(records)
    total = 0.0
    for k in range(1, bins + 1):
        lower, upper = (k - 1) / bins, k / bins
        members = [
            r
            for r in records
            if lower < r.confidence <= upper or (k == 1 and r.confidence == 0.0)
        ]
        if not members:
            continue
        acc = sum(1 for r in members if r.correct) / len(members)
        conf = sum(r.confidence for r in members) / len(members)
        total += len(members) / n * abs(acc - conf)
    return total


def test_metrics_match_brute_force():
    rng = np.random.default_rng(42)
    base = [rec(1, 1, "a"), rec(-1, 1, "a"), rec(1, -1, "b"), rec(-1, -1, "b")]
    for _ in range(1000):
        records = [*base, *random_table(rng, int(rng.integers(0, 97)))]
        assert bias_amp(records).value == pytest.approx(oracle_bias_amp(records), abs=1e-12)
        assert ece(records).ece == pytest.approx(oracle_ece(records), abs=1e-12)


def test_ece_fixture():
    table = ece(calibration_records())
    assert table.ece == pytest.approx(0.1, abs=1e-12)
    assert table.n == 4
    assert sum(b.count for b in table.bins) == 4
    assert len(table.bins) == 15
    assert table.bins[0].lower == 0.0
    assert table.bins[-1].upper == 1.0


def test_ece_perfect_calibration():
    records = [rec(1, 1, "a", 1.0), rec(-1, -1, "b", 1.0)]
    assert ece(records).ece == 0.0

    records = [
        *[rec(1, 1, "a", 0.7) for _ in range(7)],
        *[rec(1, -1, "b", 0.7) for _ in range(3)],
    ]
    assert ece(records).ece == pytest.approx(0.0, abs=1e-12)


def test_ece_is_order_invariant_and_bounded():
    rng = np.random.default_rng(3)
    table = random_table(rng, 200)
    perm = rng.permutation(200)
    shuffled = PredictionTable(
        true_class=table.true_class[perm],
        predicted_class=table.predicted_class[perm],
        confidence=table.confidence[perm],
        group=table.group[perm],
    )
    value = ece(table).ece
    assert 0.0 <= value <= 1.0
    assert ece(shuffled).ece == pytest.approx(value, abs=1e-12)


def test_ece_bin_edges():
    # Confidence 0 lands in the first bin, an upper edge in its own bin
    table = ece([rec(1, 1, "a", 0.0), rec(1, 1, "a", 1 / 15), rec(1, 1, "a", 0.5)])
    assert table.bins[0].count == 2
    assert table.bins[7].count == 1


def test_ece_requires_records():
    with pytest.raises(MetricError):
        ece([])


def test_disaggregated_accuracy_fixture():
    cells = disaggregated_accuracy(twenty_records()).as_dict()
    assert cells == {"+1/a": 1.0, "-1/a": 0.5, "+1/b": 0.5, "-1/b": 1.0}
    assert accuracy(twenty_records()) == 0.9


def test_disaggregated_accuracy_perfect_and_empty_cells():
    cells = disaggregated_accuracy(perfect(twenty_records())).as_dict()
    assert set(cells.values()) == {1.0}

    result = disaggregated_accuracy([rec(1, 1, "a"), rec(-1, -1, "b")])
    assert result.get(-1, "a").accuracy is None
    assert result.get(-1, "a").count == 0
    assert result.get(1, "a").accuracy == 1.0


def test_confidence_interval_of_identical_values():
    ci = confidence_interval([0.25] * 20)
    assert ci.mean == 0.25
    assert ci.half_width == 0.0
    assert ci.ci_low == ci.ci_high == 0.25


def test_confidence_interval_two_values():
    ci = confidence_interval([0.0, 1.0])
    assert ci.mean == 0.5
    assert ci.half_width == pytest.approx(4.4923, abs=1e-3)


def test_confidence_interval_is_translation_equivariant():
    values = np.random.default_rng(0).standard_normal(20)
    a = confidence_interval(values)
    b = confidence_interval(values + 3.0)
    assert b.mean == pytest.approx(a.mean + 3.0)
    assert b.half_width == pytest.approx(a.half_width)
    assert b.contains(a.mean + 3.0)


def test_confidence_interval_edge_cases():
    single = confidence_interval([0.3])
    assert single.half_width is None
    assert single.ci_low is None
    assert not single.contains(0.3)

    with pytest.raises(ValueError):
        confidence_interval([])
    with pytest.raises(ValueError):
        confidence_interval([1.0, float("nan")])
    with pytest.raises(ValueError, match="level"):
        confidence_interval([1.0, 2.0], level=1.0)


def test_spearman():
    assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        spearman([1, 2], [1])
