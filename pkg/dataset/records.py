"""
Meter records and CSV ingestion.

Two layouts are read:
  - long: one row per reading with columns timestamp, site_id, meter_id, meter_type, reading
  - wide: BDG2 per-meter-type export, a timestamp column plus one column per meter,
          site id is the meter name up to the first "_"
Files ending in .gz are decompressed on the fly
"""
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

import logger
from dataset.dataset_exceptions import CsvParseError, UnknownMeterTypeError, SliceTooShortError

HOURS_PER_WEEK = 168
WEEKS_PER_YEAR = 52
HOURS_PER_YEAR = HOURS_PER_WEEK * WEEKS_PER_YEAR
HOUR = pd.Timedelta(hours=1)


class MeterType(enum.Enum):
    Electricity = "electricity"
    ChilledWater = "chilledwater"
    Steam = "steam"
    HotWater = "hotwater"

    @classmethod
    def parse(cls, text):
        return cls(str(text).strip().lower().replace(" ", "").replace("_", ""))


@dataclass
class MeterRecord(object):
    """
    One meter's hourly readings. values holds NaN where nothing was read, valid flags every usable hour
    """
    meter_id: str
    site_id: str
    meter_type: MeterType
    start: pd.Timestamp
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.shape != self.valid.shape or self.values.ndim != 1:
            raise ValueError(f"{self.meter_id}: values and valid must be 1D of equal length, got {self.values.shape} and {self.valid.shape}")

    def __len__(self):
        return self.values.shape[0]

    @property
    def timestamps(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start, periods=len(self), freq="h")


@dataclass(frozen=True)
class CsvSchema(object):
    layout: str = "long"
    timestamp: str = "timestamp"
    site_id: str = "site_id"
    meter_id: str = "meter_id"
    meter_type: str = "meter_type"
    reading: str = "reading"
    wide_meter_type: MeterType = None  # layout "wide": all columns are of this type
    site_separator: str = "_"


def _read_frame(path, schema: CsvSchema) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise CsvParseError(path, 1, f"Unreadable CSV: {e}") from e
    if schema.timestamp not in frame.columns:
        raise CsvParseError(path, 1, f"Missing column {schema.timestamp!r}")
    return frame


def _long_rows(path, frame: pd.DataFrame, schema: CsvSchema) -> pd.DataFrame:
    for column in (schema.site_id, schema.meter_id, schema.meter_type, schema.reading):
        if column not in frame.columns:
            raise CsvParseError(path, 1, f"Missing column {column!r}")
    rows = pd.DataFrame({
        "timestamp": frame[schema.timestamp],
        "site_id": frame[schema.site_id].str.strip(),
        "meter_id": frame[schema.meter_id].str.strip(),
        "meter_type": frame[schema.meter_type],
        "reading": frame[schema.reading],
    })
    rows["line"] = np.arange(len(rows)) + 2  # header is line 1
    return rows


def _wide_rows(path, frame: pd.DataFrame, schema: CsvSchema) -> pd.DataFrame:
    if schema.wide_meter_type is None:
        raise CsvParseError(path, 1, "Wide layout needs the meter type of the file")
    frame = frame.assign(line=np.arange(len(frame)) + 2)
    rows = frame.melt(id_vars=[schema.timestamp, "line"], var_name="meter_id", value_name="reading")
    rows = rows.rename(columns={schema.timestamp: "timestamp"})
    rows["site_id"] = rows["meter_id"].str.split(schema.site_separator, n=1).str[0]
    rows["meter_type"] = schema.wide_meter_type.value
    return rows


def _parse_rows(path, rows: pd.DataFrame) -> pd.DataFrame:
    timestamps = pd.to_datetime(rows["timestamp"], errors="coerce", utc=True)
    bad = timestamps.isna()
    if bad.any():
        first = rows.index[bad.to_numpy()][0]
        raise CsvParseError(path, int(rows.at[first, "line"]), f"Unparsable timestamp {rows.at[first, 'timestamp']!r}")
    timestamps = timestamps.dt.tz_localize(None)
    off_hour = timestamps != timestamps.dt.floor("h")
    if off_hour.any():
        first = rows.index[off_hour.to_numpy()][0]
        raise CsvParseError(path, int(rows.at[first, "line"]), f"Timestamp {rows.at[first, 'timestamp']!r} is not on the hour")

    text = rows["reading"].str.strip()
    readings = pd.to_numeric(text.where(text != ""), errors="coerce")
    bad = readings.isna() & (text != "") & ~text.str.lower().isin(("nan", "na", "null"))
    if bad.any():
        first = rows.index[bad.to_numpy()][0]
        raise CsvParseError(path, int(rows.at[first, "line"]), f"Unparsable reading {rows.at[first, 'reading']!r}")

    types = {}
    for name in rows["meter_type"].unique():
        try:
            types[name] = MeterType.parse(name)
        except ValueError:
            first = rows.index[(rows["meter_type"] == name).to_numpy()][0]
            raise UnknownMeterTypeError(path, int(rows.at[first, "line"]), name) from None
    empty_id = (rows["meter_id"] == "") | (rows["site_id"] == "")
    if empty_id.any():
        first = rows.index[empty_id.to_numpy()][0]
        raise CsvParseError(path, int(rows.at[first, "line"]), "Empty meter_id or site_id")
    return rows.assign(timestamp=timestamps, reading=readings.astype(np.float64), meter_type=rows["meter_type"].map(types))


def _to_record(path, meter_id, group: pd.DataFrame) -> MeterRecord:
    if not group["timestamp"].is_monotonic_increasing:
        logger.warn(f"{path}: timestamps of meter {meter_id} are not monotone, sorting them")
    group = group.sort_values("timestamp", kind="stable")
    duplicates = group["timestamp"].duplicated(keep="last")
    if duplicates.any():
        logger.warn(f"{path}: meter {meter_id} has {int(duplicates.sum())} duplicate timestamps, keeping the last reading of each")
        group = group[~duplicates]
    start = group["timestamp"].iloc[0]
    hours = ((group["timestamp"] - start) // HOUR).to_numpy(dtype=np.int64)
    values = np.full(hours[-1] + 1, np.nan)
    values[hours] = group["reading"].to_numpy()
    valid = np.isfinite(values)
    first = group.iloc[0]
    return MeterRecord(meter_id=str(meter_id), site_id=str(first["site_id"]), meter_type=first["meter_type"], start=start, values=values, valid=valid)


def ingest_csv(path, schema: CsvSchema = None) -> list:
    """
    Reads given CSV into one hourly-gridded MeterRecord per meter, ordered by meter id.
    Hours without a reading (gaps or empty cells) get valid=False

    :param path: .csv or .csv.gz
    :param schema: column names and layout, default long layout with default column names
    """
    schema = CsvSchema() if schema is None else schema
    path = Path(path)
    if not path.exists():
        raise CsvParseError(path, 0, "File does not exist")
    frame = _read_frame(path, schema)
    if schema.layout == "long":
        rows = _long_rows(path, frame, schema)
    elif schema.layout == "wide":
        rows = _wide_rows(path, frame, schema)
    else:
        raise CsvParseError(path, 0, f"Unknown layout {schema.layout!r}, expected 'long' or 'wide'")
    rows = _parse_rows(path, rows)

    records = [_to_record(path, meter_id, group) for meter_id, group in rows.groupby("meter_id", sort=True)]
    logger.info(f"Ingested {len(records)} meters from {len(rows)} rows of {path}")
    return records


def year_offset(record: MeterRecord) -> int:
    """
    Hours from the record start to the first Monday 00:00 at or after it
    """
    midnight = record.start.normalize()
    if midnight < record.start:
        midnight += pd.Timedelta(days=1)
    monday = midnight + pd.Timedelta(days=(7 - midnight.dayofweek) % 7)
    return int((monday - record.start) // HOUR)


def modeling_year(record: MeterRecord):
    """
    The Monday-aligned 8736-hour window of given record

    :return: (values, valid, start timestamp of the window)
    """
    offset = year_offset(record)
    available = len(record) - offset
    if available < HOURS_PER_YEAR:
        raise SliceTooShortError(record.meter_id, HOURS_PER_YEAR, max(available, 0))
    window = slice(offset, offset + HOURS_PER_YEAR)
    return record.values[window].copy(), record.valid[window].copy(), record.start + offset * HOUR
