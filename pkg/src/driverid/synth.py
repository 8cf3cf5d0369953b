"""Synthetic labeled trip-log corpora for fixtures and demos.

A profile declares two or more drivers, each with an activity schedule
(days of week, hours) and per-feature sampling distributions.  Generation
is deterministic per seed and emits a timestamped CSV plus a matching
ingestion config.

Profile format (INI):

    [corpus]
    start_date = 2019-01-07      # anchored back to its Monday
    weeks = 4

    [driver:Alice]
    weight = 1
    days = 1-7                   # ISO: Monday=1 .. Sunday=7
    hours = 9-20
    feature.speed = uniform:35,49
    feature.rpm = normal:2100,300
    feature.road = choice:avenue|highway

Distributions: ``uniform:low,high``, ``normal:mean,sd``,
``choice:tok1|tok2|...`` (categorical), ``const:value``.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .base import ConfigError

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"

ALICE_BOB_PROFILE = """\
# Two commuters separable by cruising speed; Bob only drives weekdays.
[corpus]
start_date = 2019-01-07
weeks = 4

[driver:Alice]
weight = 1
days = 1-7
hours = 9-20
feature.speed = uniform:35,49
feature.rpm = normal:2100,300
feature.throttle = uniform:5,60
feature.road = choice:avenue|highway

[driver:Bob]
weight = 1
days = 1-5
hours = 17-21
feature.speed = uniform:52,55
feature.rpm = normal:2100,300
feature.throttle = uniform:5,60
feature.road = choice:avenue|highway
"""

BUILTIN_PROFILES = {"alice-bob": ALICE_BOB_PROFILE}


@dataclass(frozen=True)
class Distribution:
    kind: str
    params: tuple

    def sample(self, rng):
        if self.kind == "uniform":
            lo, hi = self.params
            return rng.uniform(lo, hi)
        if self.kind == "normal":
            mu, sd = self.params
            return rng.normal(mu, sd)
        if self.kind == "choice":
            return self.params[int(rng.integers(0, len(self.params)))]
        return self.params[0]  # const

    @property
    def categorical(self) -> bool:
        return self.kind == "choice"


def _parse_distribution(text: str) -> Distribution:
    kind, _, arg = text.strip().partition(":")
    try:
        if kind == "uniform" or kind == "normal":
            a, b = (float(p) for p in arg.split(","))
            if kind == "uniform" and not a < b:
                raise ConfigError(f"uniform needs low < high, got {text!r}")
            if kind == "normal" and b < 0:
                raise ConfigError(f"normal needs sd >= 0, got {text!r}")
            return Distribution(kind, (a, b))
        if kind == "choice":
            tokens = tuple(t.strip() for t in arg.split("|") if t.strip())
            if len(tokens) < 1:
                raise ConfigError(f"choice needs at least one token, got {text!r}")
            return Distribution(kind, tokens)
        if kind == "const":
            return Distribution(kind, (float(arg),))
    except ValueError:
        pass
    raise ConfigError(f"cannot parse distribution {text!r}")


def _parse_int_set(text: str, lo: int, hi: int, what: str) -> tuple:
    out = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, _, b = part.partition("-")
            out.update(range(int(a), int(b) + 1))
        else:
            out.add(int(part))
    if not out or min(out) < lo or max(out) > hi:
        raise ConfigError(f"{what} must be within [{lo}, {hi}], got {text!r}")
    return tuple(sorted(out))


@dataclass(frozen=True)
class DriverProfile:
    name: str
    weight: float
    days: tuple
    hours: tuple
    features: dict


@dataclass(frozen=True)
class CorpusProfile:
    monday: date
    weeks: int
    drivers: tuple
    feature_names: tuple


def parse_profile(text: str) -> CorpusProfile:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed profile: {exc}") from exc

    start = date(2019, 1, 7)
    weeks = 4
    if cp.has_section("corpus"):
        if cp.has_option("corpus", "start_date"):
            try:
                start = datetime.strptime(cp.get("corpus", "start_date"), "%Y-%m-%d").date()
            except ValueError as exc:
                raise ConfigError(f"bad start_date: {exc}") from exc
        if cp.has_option("corpus", "weeks"):
            weeks = cp.getint("corpus", "weeks")
            if weeks < 1:
                raise ConfigError("weeks must be >= 1")
    monday = start - timedelta(days=start.isoweekday() - 1)

    drivers = []
    feature_names: tuple | None = None
    for section in cp.sections():
        if not section.startswith("driver:"):
            continue
        name = section[len("driver:"):].strip()
        if not name:
            raise ConfigError("driver section needs a name: [driver:<name>]")
        weight = cp.getfloat(section, "weight", fallback=1.0)
        if weight <= 0:
            raise ConfigError(f"driver {name!r}: weight must be positive")
        days = _parse_int_set(cp.get(section, "days", fallback="1-7"), 1, 7,
                              f"driver {name!r} days")
        hours = _parse_int_set(cp.get(section, "hours", fallback="0-23"), 0, 23,
                               f"driver {name!r} hours")
        features = {}
        for key, value in cp.items(section):
            if key.startswith("feature."):
                features[key[len("feature."):]] = _parse_distribution(value)
        if not features:
            raise ConfigError(f"driver {name!r} declares no feature.* entries")
        names = tuple(features)
        if feature_names is None:
            feature_names = names
        elif set(names) != set(feature_names):
            raise ConfigError(f"driver {name!r} features {sorted(names)} do not match"
                              f" {sorted(feature_names)}")
        drivers.append(DriverProfile(name, weight, days, hours, features))

    if len(drivers) < 2:
        raise ConfigError("profile must declare at least 2 [driver:*] sections")
    return CorpusProfile(monday, weeks, tuple(drivers), feature_names)


def load_profile(source) -> CorpusProfile:
    """Load a profile from a built-in name or a file path."""
    if isinstance(source, str) and source in BUILTIN_PROFILES:
        return parse_profile(BUILTIN_PROFILES[source])
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"profile {source!r} is neither a built-in name"
                          f" ({', '.join(BUILTIN_PROFILES)}) nor a file")
    return parse_profile(path.read_text(encoding="utf-8"))


def generate_rows(profile: CorpusProfile, n: int, seed: int):
    """Yield ``(header, rows)`` with every cell already formatted as text."""
    if n < 0:
        raise ConfigError("row count must be >= 0")
    rng = np.random.default_rng(seed)
    header = ["timestamp", *profile.feature_names, "driver"]
    weights = np.array([d.weight for d in profile.drivers], dtype=np.float64)
    weights = weights / weights.sum()
    rows = []
    for _ in range(n):
        d = profile.drivers[int(rng.choice(len(profile.drivers), p=weights))]
        week = int(rng.integers(0, profile.weeks))
        dow = d.days[int(rng.integers(0, len(d.days)))]
        hour = d.hours[int(rng.integers(0, len(d.hours)))]
        minute = int(rng.integers(0, 60))
        second = int(rng.integers(0, 60))
        day = profile.monday + timedelta(days=week * 7 + (dow - 1))
        ts = datetime(day.year, day.month, day.day, hour, minute, second)
        row = [ts.strftime(TIMESTAMP_FORMAT)]
        for name in profile.feature_names:
            v = d.features[name].sample(rng)
            row.append(v if isinstance(v, str) else repr(float(v)))
        row.append(d.name)
        rows.append(row)
    return header, rows


def ingest_config_text(profile: CorpusProfile) -> str:
    categorical = [n for n in profile.feature_names
                   if profile.drivers[0].features[n].categorical]
    lines = [
        "label_column = driver",
        "timestamp_column = timestamp",
        f"timestamp_format = {TIMESTAMP_FORMAT}",
    ]
    if categorical:
        lines.append(f"categorical_columns = {', '.join(categorical)}")
    return "\n".join(lines) + "\n"


def write_corpus(profile: CorpusProfile, n: int, seed: int, outdir) -> tuple:
    """Write ``dataset.csv`` and ``ingest.cfg`` under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    header, rows = generate_rows(profile, n, seed)
    csv_path = outdir / "dataset.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    cfg_path = outdir / "ingest.cfg"
    cfg_path.write_text(ingest_config_text(profile), encoding="utf-8")
    return csv_path, cfg_path
