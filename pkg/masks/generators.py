"""
Seeded mask generators. Day-based kinds remove whole days: day d covers rows (d mod 7) * 24 .. + 24
of column d div 7, so the number of removed days is exactly round(rate * 364)
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

from common import settings
from common.helper import derive_seed
from dataset.image import IMAGE_SHAPE
from masks.mask_grid import MaskGrid, MaskKind
from masks.masks_exceptions import RateOutOfRangeError

DAYS_PER_YEAR = 364
HOURS_PER_DAY = 24
MAX_RATE = 0.5

# Row/column steps of the four walking directions: down, right, up, left
_DIRECTIONS = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=np.int64)


def _check_rate(rate):
    if not 0.0 <= rate <= MAX_RATE:
        raise RateOutOfRangeError(rate, 0.0, MAX_RATE)


def day_count(rate) -> int:
    """
    round(rate * 364), ties to even
    """
    _check_rate(rate)
    return round(rate * DAYS_PER_YEAR)


def days_to_grid(days) -> np.ndarray:
    grid = np.ones(IMAGE_SHAPE)
    for day in days:
        first_row = (day % 7) * HOURS_PER_DAY
        grid[first_row:first_row + HOURS_PER_DAY, day // 7] = 0.0
    return grid


def hole_days(mask: MaskGrid) -> list:
    """
    Days whose 24 cells are all holes
    """
    holes = mask.holes
    return [day for day in range(DAYS_PER_YEAR)
            if holes[(day % 7) * HOURS_PER_DAY:(day % 7 + 1) * HOURS_PER_DAY, day // 7].all()]


def random_day_mask(rate, seed) -> MaskGrid:
    count = day_count(rate)
    rng = np.random.default_rng(seed)
    days = rng.choice(DAYS_PER_YEAR, size=count, replace=False)
    return MaskGrid(grid=days_to_grid(days), kind=MaskKind.RandomDays, target_rate=float(rate), seed=int(seed))


def continuous_mask(rate, seed) -> MaskGrid:
    """
    One block of consecutive days, never wrapping around the year end
    """
    count = day_count(rate)
    rng = np.random.default_rng(seed)
    first_day = int(rng.integers(0, DAYS_PER_YEAR - count + 1))
    return MaskGrid(grid=days_to_grid(range(first_day, first_day + count)), kind=MaskKind.Continuous, target_rate=float(rate), seed=int(seed))


@dataclass(frozen=True)
class IrregularParams(object):
    min_coverage: float = 0.05
    max_coverage: float = 0.5
    min_strokes: int = 5
    max_strokes: int = 20
    min_thickness: int = 1
    max_thickness: int = 4
    turn_probability: float = 0.15

    @classmethod
    def from_settings(cls):
        masks = settings.Settings().Masks
        return cls(min_coverage=float(masks.IrregularMinCoverage), max_coverage=float(masks.IrregularMaxCoverage),
                   min_strokes=int(masks.IrregularMinStrokes), max_strokes=int(masks.IrregularMaxStrokes),
                   min_thickness=int(masks.IrregularMinThickness), max_thickness=int(masks.IrregularMaxThickness),
                   turn_probability=float(masks.IrregularTurnProbability))


@njit(cache=True)
def walk_stroke(holes, row, col, direction, thickness, budget, turn_draws, new_directions, turn_probability, directions):
    """
    Paints a square brush of given thickness along a random walk until budget new hole cells were added
    or the pre-drawn randomness is used up. The walk bounces off the grid edges

    :return: number of cells turned into holes
    """
    height, width = holes.shape
    added = 0
    for step in range(turn_draws.shape[0]):
        for i in range(row, min(row + thickness, height)):
            for j in range(col, min(col + thickness, width)):
                if holes[i, j] == 0:
                    holes[i, j] = 1
                    added += 1
        if added >= budget:
            break
        if turn_draws[step] < turn_probability:
            direction = new_directions[step]
        next_row = row + directions[direction, 0]
        next_col = col + directions[direction, 1]
        if next_row < 0 or next_row > height - thickness or next_col < 0 or next_col > width - thickness:
            direction = (direction + 2) % 4
            next_row = min(max(row + directions[direction, 0], 0), height - thickness)
            next_col = min(max(col + directions[direction, 1], 0), width - thickness)
        row = next_row
        col = next_col
    return added


def _draw_stroke(rng, holes, budget, params: IrregularParams) -> int:
    height, width = holes.shape
    thickness = int(rng.integers(params.min_thickness, params.max_thickness + 1))
    row = int(rng.integers(0, height - thickness + 1))
    col = int(rng.integers(0, width - thickness + 1))
    direction = int(rng.integers(0, 4))
    steps = 4 * budget + 64
    turn_draws = rng.random(steps)
    new_directions = rng.integers(0, 4, size=steps)
    return walk_stroke(holes, row, col, direction, thickness, budget, turn_draws, new_directions, params.turn_probability, _DIRECTIONS)


def irregular_mask(seed, params: IrregularParams = None, max_top_ups=100) -> MaskGrid:
    """
    Random-walk strokes: the target coverage is drawn from the configured range (kept a brush
    area below the upper bound), split evenly among 5 to 20 strokes. Strokes stop at their share;
    if the walks fell short of the minimum coverage, extra strokes top it up
    """
    params = IrregularParams.from_settings() if params is None else params
    rng = np.random.default_rng(seed)
    holes = np.zeros(IMAGE_SHAPE, dtype=np.uint8)
    stroke_count = int(rng.integers(params.min_strokes, params.max_strokes + 1))
    cells = holes.size
    if stroke_count > 0:
        upper = params.max_coverage - params.max_thickness ** 2 / cells
        target = int(rng.uniform(params.min_coverage, max(upper, params.min_coverage)) * cells)
        painted = 0
        for stroke in range(stroke_count):
            budget = -(-(target - painted) // (stroke_count - stroke))
            if budget <= 0:
                break
            painted += _draw_stroke(rng, holes, budget, params)
        minimum = int(np.ceil(params.min_coverage * cells))
        for _ in range(max_top_ups):
            if painted >= minimum:
                break
            painted += _draw_stroke(rng, holes, minimum - painted, params)
    grid = 1.0 - holes.astype(np.float64)
    return MaskGrid(grid=grid, kind=MaskKind.Irregular, target_rate=float(holes.mean()), seed=int(seed))


def generate_mask(kind: MaskKind, rate, seed) -> MaskGrid:
    """
    Dispatches on kind. Irregular masks draw their own coverage and ignore rate,
    their target_rate is the coverage they got
    """
    kind = MaskKind(kind)
    if kind == MaskKind.RandomDays:
        return random_day_mask(rate, seed)
    if kind == MaskKind.Continuous:
        return continuous_mask(rate, seed)
    return irregular_mask(seed)


def derived_mask(kind, rate, *seed_parts) -> MaskGrid:
    """
    Mask with its seed derived from given parts (root seed, purpose, indices...)
    """
    return generate_mask(kind, rate, derive_seed(*seed_parts))
