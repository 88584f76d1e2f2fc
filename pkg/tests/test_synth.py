import numpy as np
import pytest

from dataset.cleaning import clean
from dataset.folds import split_by_site
from dataset.records import MeterType, ingest_csv
from synth import fleet
from synth.fleet import SynthSpec
from synth.synth_exceptions import SynthSpecError


def by_type(records, site_id, meter_type):
    return next(record for record in records if record.site_id == site_id and record.meter_type == meter_type)


class TestSynthSpec(object):
    @staticmethod
    @pytest.mark.parametrize("changes", (
        {"sites": 0},
        {"meters_per_site": 0},
        {"hours": 100},
        {"noise_sigma": 0.5},
        {"type_mix": {"gas": 1.0}},
        {"type_mix": {"electricity": 0.0}},
        {"weather_amplitude": {"steam": 3.0}},
        {"start": "not a date"},
    ))
    def test_invalid(changes):
        with pytest.raises(SynthSpecError):
            SynthSpec(**changes)

    @staticmethod
    def test_from_settings():
        spec = SynthSpec.from_settings(seed=4, sites=2)
        assert (spec.sites, spec.meters_per_site, spec.seed) == (2, 20, 4)
        assert spec.meter_count == 40
        assert spec.weather_amplitude["hotwater"] == 0.8

    @staticmethod
    @pytest.mark.parametrize(("meters", "expected"), ((4, (1, 1, 1, 1)), (20, (8, 4, 4, 4)), (10, (4, 2, 2, 2))))
    def test_type_counts(meters, expected):
        counts = fleet.type_counts(SynthSpec(meters_per_site=meters))
        assert tuple(counts[meter_type] for meter_type in MeterType) == expected

    @staticmethod
    def test_layout_ids():
        layout = fleet.fleet_layout(SynthSpec(sites=2, meters_per_site=4))
        assert len(layout) == 8
        assert layout[0] == ("site000", "site000_electricity_00", MeterType.Electricity)
        assert len({meter_id for _, meter_id, _ in layout}) == 8


class TestTemperature(object):
    @staticmethod
    def test_range_and_season():
        spec = SynthSpec(sites=1, meters_per_site=1)
        temperature = fleet.site_temperature(spec, "site000")
        assert np.max(np.abs(temperature)) == 1.0
        assert temperature[:24 * 14].mean() < 0 < temperature[24 * 182:24 * 196].mean()

    @staticmethod
    def test_sites_differ():
        spec = SynthSpec(sites=2, meters_per_site=1)
        assert not np.array_equal(fleet.site_temperature(spec, "site000"), fleet.site_temperature(spec, "site001"))


class TestFleet(object):
    @staticmethod
    def test_shape_and_sign(small_fleet):
        assert len(small_fleet) == 20
        for record in small_fleet:
            assert record.values.shape == (8736,)
            assert np.all(record.values >= 0)
            assert record.valid.all()

    @staticmethod
    def test_seed_replay(small_fleet):
        again = fleet.generate_fleet(SynthSpec(sites=5, meters_per_site=4, seed=0))
        assert all(np.array_equal(a.values, b.values) and a.meter_id == b.meter_id for a, b in zip(small_fleet, again))

    @staticmethod
    def test_other_seed_differs(small_fleet):
        other = fleet.generate_fleet(SynthSpec(sites=5, meters_per_site=4, seed=1))
        assert not np.array_equal(small_fleet[0].values, other[0].values)

    @staticmethod
    def test_electricity_is_weekly(small_fleet):
        for record in small_fleet:
            if record.meter_type == MeterType.Electricity:
                assert np.corrcoef(record.values[:-168], record.values[168:])[0, 1] > 0.9

    @staticmethod
    def test_heating_against_cooling(small_fleet):
        for site in range(5):
            site_id = f"site{site:03d}"
            hot = by_type(small_fleet, site_id, MeterType.HotWater).values
            chilled = by_type(small_fleet, site_id, MeterType.ChilledWater).values
            assert np.corrcoef(hot, chilled)[0, 1] < 0

    @staticmethod
    def test_cleaning_flags_nothing(small_fleet):
        assert all(clean(record).valid.all() for record in small_fleet)

    @staticmethod
    def test_splits_by_site(small_fleet):
        assignment = split_by_site(small_fleet, seed=0)
        assert sorted(assignment.sites) == [f"site{site:03d}" for site in range(5)]

    @staticmethod
    def test_csv_replay(tmp_path, small_fleet):
        first = fleet.write_fleet_csv(small_fleet[:3], tmp_path / "a.csv")
        second = fleet.write_fleet_csv(small_fleet[:3], tmp_path / "b.csv")
        assert first.read_bytes() == second.read_bytes()
        loaded = ingest_csv(first)
        originals = sorted(small_fleet[:3], key=lambda record: record.meter_id)
        assert [record.meter_id for record in loaded] == [record.meter_id for record in originals]
        assert all(np.array_equal(a.values, b.values) for a, b in zip(loaded, originals))
