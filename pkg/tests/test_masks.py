import numpy as np
import pytest

from masks import generators
from masks.generators import DAYS_PER_YEAR, IrregularParams
from masks.mask_grid import MaskGrid, MaskKind, apply_mask, effective_mask, observed_grid
from masks.masks_exceptions import RateOutOfRangeError, MaskShapeError, MaskFormatError

RATES = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)


def day_aligned(mask: MaskGrid) -> bool:
    flat = mask.holes.T.reshape(-1)  # hour of the year order
    return bool(np.all(flat.reshape(DAYS_PER_YEAR, 24).all(axis=1) == flat.reshape(DAYS_PER_YEAR, 24).any(axis=1)))


class TestDayMasks(object):
    @staticmethod
    @pytest.mark.parametrize(("rate", "days"), ((0.0, 0), (0.05, 18), (0.1, 36), (0.2, 73), (0.3, 109), (0.4, 146), (0.5, 182)))
    def test_day_count(rate, days):
        assert generators.day_count(rate) == days

    @staticmethod
    @pytest.mark.parametrize("kind", (MaskKind.RandomDays, MaskKind.Continuous))
    def test_rate_zero_is_all_ones(kind):
        assert np.all(generators.generate_mask(kind, 0.0, seed=1).grid == 1.0)

    @staticmethod
    def test_half_rate():
        mask = generators.random_day_mask(0.5, seed=0)
        assert int(mask.holes.sum()) == 4368
        assert len(generators.hole_days(mask)) == 182

    @staticmethod
    @pytest.mark.parametrize("kind", (MaskKind.RandomDays, MaskKind.Continuous))
    def test_exact_counts_and_alignment(kind):
        for rate in RATES:
            for seed in range(100):
                mask = generators.generate_mask(kind, rate, seed)
                assert len(generators.hole_days(mask)) == generators.day_count(rate)
                assert int(mask.holes.sum()) == 24 * generators.day_count(rate)
                assert day_aligned(mask)
                assert abs(mask.hole_fraction - rate) <= 24 / 8736 + 1e-12

    @staticmethod
    def test_continuous_is_one_run():
        for seed in range(200):
            days = generators.hole_days(generators.continuous_mask(0.1, seed))
            assert len(days) == 36
            assert days == list(range(days[0], days[0] + 36))

    @staticmethod
    @pytest.mark.parametrize("rate", (-0.01, 0.51, 1.0))
    def test_rate_out_of_range(rate):
        with pytest.raises(RateOutOfRangeError):
            generators.random_day_mask(rate, seed=0)
        with pytest.raises(RateOutOfRangeError):
            generators.continuous_mask(rate, seed=0)

    @staticmethod
    @pytest.mark.parametrize("kind", tuple(MaskKind))
    def test_seed_determinism(kind):
        first = generators.generate_mask(kind, 0.2, seed=42)
        assert np.array_equal(first.grid, generators.generate_mask(kind, 0.2, seed=42).grid)

    @staticmethod
    def test_distinct_seeds_distinct_grids():
        same = sum(np.array_equal(generators.random_day_mask(0.05, seed).grid, generators.random_day_mask(0.05, seed + 1000).grid)
                   for seed in range(1000))
        assert same <= 10


class TestIrregular(object):
    @staticmethod
    def test_zero_strokes():
        mask = generators.irregular_mask(0, IrregularParams(min_strokes=0, max_strokes=0))
        assert np.all(mask.grid == 1.0)

    @staticmethod
    def test_coverage_within_range():
        inside = 0
        for seed in range(1000):
            mask = generators.irregular_mask(seed)
            assert set(np.unique(mask.grid)) <= {0.0, 1.0}
            assert mask.kind == MaskKind.Irregular
            inside += 0.05 <= mask.hole_fraction <= 0.5
        assert inside >= 990

    @staticmethod
    def test_target_rate_is_realized_coverage():
        mask = generators.irregular_mask(3)
        assert mask.target_rate == mask.hole_fraction

    @staticmethod
    @pytest.mark.parametrize("rate", (0.05, 0.3))
    def test_generate_records_coverage_not_requested_rate(rate):
        mask = generators.generate_mask(MaskKind.Irregular, rate, 3)
        assert np.array_equal(mask.grid, generators.irregular_mask(3).grid)
        assert mask.target_rate == mask.hole_fraction

    @staticmethod
    def test_params_from_settings():
        assert generators.IrregularParams.from_settings() == IrregularParams()


class TestMaskGrid(object):
    @staticmethod
    def test_wrong_shape():
        with pytest.raises(MaskShapeError):
            MaskGrid(grid=np.ones((52, 168)), kind=MaskKind.RandomDays, target_rate=0.0, seed=0)

    @staticmethod
    def test_text_round_trip():
        mask = generators.random_day_mask(0.3, seed=9)
        loaded = MaskGrid.from_text(mask.to_text())
        assert np.array_equal(loaded.grid, mask.grid)
        assert (loaded.kind, loaded.target_rate, loaded.seed) == (mask.kind, mask.target_rate, mask.seed)

    @staticmethod
    def test_text_layout():
        lines = generators.continuous_mask(0.1, seed=0).to_text().splitlines()
        assert lines[:3] == ["kind: continuous", "rate: 0.1", "seed: 0"]
        assert len(lines) == 171 and all(len(line) == 52 for line in lines[3:])

    @staticmethod
    @pytest.mark.parametrize("text", (
        "kind: continuous\nrate: 0.1\n",
        "kind: nothing\nrate: 0.1\nseed: 0\n" + ("1" * 52 + "\n") * 168,
        "kind: continuous\nrate: 0.1\nseed: 0\n" + ("1" * 51 + "x\n") * 168,
        "rate: 0.1\nkind: continuous\nseed: 0\n" + ("1" * 52 + "\n") * 168,
    ))
    def test_bad_text(text):
        with pytest.raises(MaskFormatError):
            MaskGrid.from_text(text)


class TestApplyMask(object):
    @staticmethod
    def test_all_ones_leaves_image(make_weekly_image):
        image = make_weekly_image()
        mask = generators.random_day_mask(0.0, seed=0)
        assert np.array_equal(apply_mask(image, mask).matrix, image.matrix)

    @staticmethod
    def test_hole_column_zeroed(make_weekly_image):
        image = make_weekly_image(profile=np.full(168, 0.5))
        grid = np.ones((168, 52))
        grid[:, 7] = 0.0
        masked = apply_mask(image, MaskGrid(grid=grid, kind=MaskKind.Continuous, target_rate=7 / 364, seed=0))
        assert np.all(masked.matrix[:, 7] == 0.0)
        assert np.array_equal(masked.matrix[:, :7], image.matrix[:, :7])
        assert np.all(image.matrix[:, 7] == 0.5)

    @staticmethod
    def test_effective_mask():
        mask = generators.random_day_mask(0.3, seed=4)
        validity = np.ones((168, 52), dtype=bool)
        assert np.array_equal(effective_mask(mask, validity), mask.holes)
        validity[:, :10] = False
        evaluated = effective_mask(mask, validity)
        assert not evaluated[:, :10].any()
        assert evaluated.sum() == mask.holes.sum() - (mask.holes & ~validity).sum()

    @staticmethod
    def test_observed_grid():
        mask = generators.continuous_mask(0.2, seed=1)
        validity = np.ones((168, 52), dtype=bool)
        validity[::3, 40] = False
        observed = observed_grid(mask, validity)
        assert np.array_equal(observed > 0, ~mask.holes & validity)
        with pytest.raises(MaskShapeError):
            observed_grid(mask, np.ones((52, 168), dtype=bool))
