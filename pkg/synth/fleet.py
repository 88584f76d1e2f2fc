"""
Synthetic meter fleets standing in for a real building dataset.

Every meter reading is

    scale * (weekly profile + weather amplitude * weather drive) * (1 + noise sigma * N(0, 1))

The weekly profile is a work-week occupancy square wave plus a day/night sinusoid. The weather
drive comes from one temperature series per site (seasonal sinusoid, daily swing, smoothed noise):
chilled water follows the temperature, hot water and steam follow its negative, electricity barely
reacts. All values stay positive, so the data leaves cleaning untouched.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

import curio_wrapper
import logger
from common import settings
from common.helper import atomic_write, format_float, rng_for
from dataset.records import MeterRecord, MeterType, HOURS_PER_YEAR
from synth.synth_exceptions import SynthSpecError

SMOOTHING_HOURS = 24

# (base load, occupancy load, day/night amplitude) per meter type
PROFILES = {
    MeterType.Electricity: (0.6, 0.5, 0.1),
    MeterType.ChilledWater: (0.4, 0.15, 0.05),
    MeterType.Steam: (0.4, 0.1, 0.05),
    MeterType.HotWater: (0.4, 0.1, 0.05),
}
# +1: load rises with temperature, -1: load falls with it
WEATHER_SIGN = {
    MeterType.Electricity: 1.0,
    MeterType.ChilledWater: 1.0,
    MeterType.Steam: -1.0,
    MeterType.HotWater: -1.0,
}


@dataclass(frozen=True)
class SynthSpec(object):
    sites: int = 10
    meters_per_site: int = 20
    type_mix: dict = field(default_factory=lambda: {"electricity": 0.4, "chilledwater": 0.2, "steam": 0.2, "hotwater": 0.2})
    weather_amplitude: dict = field(default_factory=lambda: {"electricity": 0.05, "chilledwater": 0.8, "steam": 0.8, "hotwater": 0.8})
    noise_sigma: float = 0.02
    start: str = "2016-01-04T00:00:00"
    hours: int = HOURS_PER_YEAR
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.sites < 1:
            raise SynthSpecError("sites", ">= 1", self.sites)
        if self.meters_per_site < 1:
            raise SynthSpecError("meters_per_site", ">= 1", self.meters_per_site)
        if self.hours < HOURS_PER_YEAR:
            raise SynthSpecError("hours", f">= {HOURS_PER_YEAR}", self.hours)
        if not 0 <= self.noise_sigma < 0.2:
            raise SynthSpecError("noise_sigma", "in [0, 0.2)", self.noise_sigma)
        for name in set(self.type_mix) | set(self.weather_amplitude):
            try:
                MeterType.parse(name)
            except ValueError:
                raise SynthSpecError("meter type", ", ".join(t.value for t in MeterType), name) from None
        if any(share < 0 for share in self.type_mix.values()) or sum(self.type_mix.values()) <= 0:
            raise SynthSpecError("type_mix", "non-negative shares with a positive sum", self.type_mix)
        if any(not 0 <= amplitude <= 2 for amplitude in self.weather_amplitude.values()):
            raise SynthSpecError("weather_amplitude", "values in [0, 2]", self.weather_amplitude)
        try:
            pd.Timestamp(self.start)
        except ValueError:
            raise SynthSpecError("start", "an ISO timestamp", self.start) from None

    @classmethod
    def from_settings(cls, seed=0, **overrides):
        synth = settings.Settings().Synth
        values = dict(sites=synth.Sites, meters_per_site=synth.MetersPerSite, type_mix=settings.Settings._to_dict(synth.TypeMix),
                      weather_amplitude=settings.Settings._to_dict(synth.WeatherAmplitude), noise_sigma=synth.NoiseSigma,
                      start=synth.Start, seed=seed)
        values.update(overrides)
        return cls(**values)

    @property
    def meter_count(self) -> int:
        return self.sites * self.meters_per_site

    @property
    def timestamps(self) -> pd.DatetimeIndex:
        return pd.date_range(pd.Timestamp(self.start), periods=self.hours, freq="h")


def type_counts(spec: SynthSpec) -> dict:
    """
    Meters per type within one site, largest remainder apportionment of type_mix
    """
    mix = {MeterType.parse(name): float(share) for name, share in spec.type_mix.items()}
    types = [meter_type for meter_type in MeterType if mix.get(meter_type, 0.0) > 0]
    total = sum(mix[meter_type] for meter_type in types)
    exact = {meter_type: mix[meter_type] / total * spec.meters_per_site for meter_type in types}
    counts = {meter_type: int(np.floor(value)) for meter_type, value in exact.items()}
    remaining = spec.meters_per_site - sum(counts.values())
    by_remainder = sorted(types, key=lambda meter_type: (-(exact[meter_type] - counts[meter_type]), types.index(meter_type)))
    for meter_type in by_remainder[:remaining]:
        counts[meter_type] += 1
    return counts


def smoothed_noise(rng: np.random.Generator, size, window=SMOOTHING_HOURS) -> np.ndarray:
    """
    Moving average of white noise, rescaled to unit standard deviation
    """
    noise = np.convolve(rng.standard_normal(size + window - 1), np.ones(window) / window, mode="valid")
    return noise * np.sqrt(window)


def site_temperature(spec: SynthSpec, site_id) -> np.ndarray:
    """
    Normalized temperature in [-1, 1]: coldest in January, hottest in July
    """
    timestamps = spec.timestamps
    rng = rng_for(spec.seed, "synth", "temperature", site_id)
    day_of_year = timestamps.dayofyear.to_numpy() + timestamps.hour.to_numpy() / 24.0
    seasonal = -np.cos(2 * np.pi * (day_of_year - 15) / 365.25)
    daily = 0.15 * np.sin(2 * np.pi * (timestamps.hour.to_numpy() - 9) / 24.0)
    temperature = seasonal + daily + 0.1 * smoothed_noise(rng, spec.hours)
    return temperature / np.max(np.abs(temperature))


def weekly_profile(timestamps: pd.DatetimeIndex, meter_type: MeterType, opens, closes) -> np.ndarray:
    base, occupancy_load, day_night = PROFILES[meter_type]
    hour = timestamps.hour.to_numpy()
    working_day = timestamps.dayofweek.to_numpy() < 5
    occupied = working_day & (hour >= opens) & (hour < closes)
    return base + occupancy_load * occupied + day_night * np.sin(2 * np.pi * (hour - 6) / 24.0)


def generate_meter(spec: SynthSpec, site_id, meter_id, meter_type: MeterType, temperature) -> MeterRecord:
    rng = rng_for(spec.seed, "synth", "meter", meter_id)
    scale = float(np.exp(rng.normal(np.log(100.0), 0.5)))
    opens, closes = int(rng.integers(7, 10)), int(rng.integers(17, 20))
    amplitude = float(spec.weather_amplitude.get(meter_type.value, 0.0))
    drive = (1.0 + WEATHER_SIGN[meter_type] * temperature) / 2.0
    load = weekly_profile(spec.timestamps, meter_type, opens, closes) + amplitude * drive
    values = scale * load * (1.0 + spec.noise_sigma * rng.standard_normal(spec.hours))
    return MeterRecord(meter_id=meter_id, site_id=site_id, meter_type=meter_type, start=spec.timestamps[0],
                       values=values, valid=np.ones(spec.hours, dtype=bool))


def fleet_layout(spec: SynthSpec) -> list:
    """
    (site id, meter id, meter type) of every meter in generation order
    """
    counts = type_counts(spec)
    layout = []
    for site in range(spec.sites):
        site_id = f"site{site:03d}"
        for meter_type, count in counts.items():
            for index in range(count):
                layout.append((site_id, f"{site_id}_{meter_type.value}_{index:02d}", meter_type))
    return layout


def generate_fleet(spec: SynthSpec) -> list:
    """
    Deterministic in spec.seed; every meter draws from its own named random stream,
    so meters come out the same whatever the thread count
    """
    layout = fleet_layout(spec)
    temperatures = {site_id: site_temperature(spec, site_id) for site_id in sorted({site_id for site_id, _, _ in layout})}
    records = curio_wrapper.parallel_map(lambda entry: generate_meter(spec, entry[0], entry[1], entry[2], temperatures[entry[0]]), layout)
    logger.info(f"Generated {len(records)} synthetic meters on {spec.sites} sites (seed {spec.seed})")
    return records


def fleet_frame(records) -> pd.DataFrame:
    """
    Long ingestion layout: timestamp, site_id, meter_id, meter_type, reading
    """
    frames = []
    for record in records:
        frames.append(pd.DataFrame({
            "timestamp": record.timestamps.strftime("%Y-%m-%d %H:%M:%S"),
            "site_id": record.site_id,
            "meter_id": record.meter_id,
            "meter_type": record.meter_type.value,
            "reading": [format_float(value) if valid else "" for value, valid in zip(record.values, record.valid)],
        }))
    return pd.concat(frames, ignore_index=True)


def write_fleet_csv(records, path) -> Path:
    path = Path(path)
    atomic_write(path, fleet_frame(records).to_csv(index=False, lineterminator="\n"), mode="w")
    logger.info(f"Wrote {len(records)} meters to {path}")
    return path
