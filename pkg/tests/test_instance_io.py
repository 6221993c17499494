"""Instance parsing, validation and canonical round trips."""

import numpy as np
import pytest

from boxroute.instance import (
    ItemSpec,
    ParseError,
    ValidationError,
    parse_benchmark,
    parse_canonical,
    write_canonical,
)

MINIMAL = """\
--- instance name
tiny
--- customers, vehicles, total items
1 1 1
--- vehicle: weight capacity, container length, width, height
90 60 25 30
--- depot
30 40
--- customers
1 37 52 19 1
10 10 10 0
"""


class TestParseBenchmark:
    def test_minimal_instance(self):
        inst = parse_benchmark(MINIMAL)
        assert inst.name == "tiny"
        assert inst.n == 1
        assert inst.customers[0].items == (ItemSpec(10, 10, 10, False, 1),)
        assert inst.vehicle.volume == 60 * 25 * 30

    def test_euclidean_costs_unrounded(self):
        inst = parse_benchmark(MINIMAL)
        expected = np.hypot(37 - 30, 52 - 40)
        assert inst.cost(0, 1) == pytest.approx(expected, abs=0)
        assert inst.cost(1, 1) == 0.0

    def test_customer_count_mismatch(self):
        text = MINIMAL.replace("1 1 1", "3 1 1")
        with pytest.raises(ParseError):
            parse_benchmark(text)

    def test_item_count_mismatch(self):
        text = MINIMAL.replace("1 1 1", "1 1 2")
        with pytest.raises(ParseError) as err:
            parse_benchmark(text)
        assert "item" in str(err.value)

    def test_error_names_the_line(self):
        text = MINIMAL.replace("10 10 10 0", "10 10 bad 0")
        with pytest.raises(ParseError) as err:
            parse_benchmark(text)
        assert "line 11" in str(err.value)

    def test_zero_dimension_rejected(self):
        text = MINIMAL.replace("10 10 10 0", "10 10 0 0")
        with pytest.raises((ParseError, ValidationError)):
            parse_benchmark(text)

    def test_overweight_customer_rejected(self):
        text = MINIMAL.replace("1 37 52 19 1", "1 37 52 95 1")
        with pytest.raises(ValidationError):
            parse_benchmark(text)

    def test_unfitting_item_rejected(self):
        text = MINIMAL.replace("10 10 10 0", "61 10 10 0")
        with pytest.raises(ValidationError):
            parse_benchmark(text)

    def test_rotated_fit_is_accepted(self):
        # 10 x 50 does not fit as-is (width 50 > 25) but fits rotated
        text = MINIMAL.replace("10 10 10 0", "10 50 10 0")
        inst = parse_benchmark(text)
        assert inst.customers[0].items[0].width == 50


class TestCanonical:
    def test_round_trip_identity(self):
        inst = parse_benchmark(MINIMAL)
        again = parse_canonical(write_canonical(inst))
        assert again.name == inst.name
        assert again.vehicle == inst.vehicle
        assert again.customers == inst.customers
        assert np.allclose(again.cost_matrix, inst.cost_matrix)

    def test_missing_vehicle(self):
        with pytest.raises(ValidationError):
            parse_canonical('{"name": "x", "depot": {"x": 0, "y": 0}, "customers": []}')

    def test_zero_height_item(self):
        doc = write_canonical(parse_benchmark(MINIMAL)).replace('"h": 10', '"h": 0')
        with pytest.raises(ValidationError):
            parse_canonical(doc)

    def test_not_json(self):
        with pytest.raises(ParseError):
            parse_canonical("definitely not json")
