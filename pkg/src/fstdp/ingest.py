"""Hourly station records: loading, binarization and grouping.

Input is a long-format CSV with one row per (station, hour)::

    station,hour,value[,lat,lon]

``hour`` is an integer index from the dataset epoch.  Hours absent from the
file are filled with 0 and counted per station.  A station's coordinates,
when present, must not change between rows.
"""

import csv
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .analytics import normalized_cov, off_diagonal
from .core import SpikeRaster
from .exceptions import ConflictError, InvalidInputError, ParseError

__all__ = [
    "StationTable",
    "KMeansResult",
    "load_event_csv",
    "write_event_csv",
    "binarize_hourly",
    "station_features",
    "kmeans",
    "cluster_stations",
    "cluster_agreement",
]

DEFAULT_SCHEMA = {"id": "station", "time": "hour", "value": "value", "lat": "lat", "lon": "lon"}


@dataclass(frozen=True, eq=False)
class StationTable:
    """Dense station x hour value matrix.

    ``missing`` counts, per station, the hours that had no row in the source
    file and were filled with 0.  It is load metadata and is not compared by
    ``==``.
    """

    station_ids: Tuple[str, ...]
    values: np.ndarray
    lat: Optional[np.ndarray] = None
    lon: Optional[np.ndarray] = None
    missing: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "station_ids", tuple(str(s) for s in self.station_ids))
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] != len(self.station_ids):
            raise InvalidInputError("values must be stations x hours")
        if len(set(self.station_ids)) != len(self.station_ids):
            raise InvalidInputError("station ids must be unique")
        for name in ("lat", "lon"):
            x = getattr(self, name)
            if x is not None:
                x = np.asarray(x, dtype=float)
                if x.shape != (v.shape[0],):
                    raise InvalidInputError(f"{name} must have one entry per station")
                object.__setattr__(self, name, x)
        if (self.lat is None) != (self.lon is None):
            raise InvalidInputError("lat and lon must be given together")
        if self.missing is None:
            object.__setattr__(self, "missing", np.zeros(v.shape[0], dtype=int))

    @property
    def n_stations(self):
        return self.values.shape[0]

    @property
    def n_hours(self):
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, StationTable):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))

        return (
            self.station_ids == other.station_ids
            and np.array_equal(self.values, other.values)
            and same(self.lat, other.lat)
            and same(self.lon, other.lon)
        )


def load_event_csv(path, schema=None):
    """Read a long-format station CSV into a dense :class:`StationTable`.

    Parameters
    ----------
    path : str or Path
    schema : dict, optional
        Column names for the keys ``id``, ``time``, ``value`` and optionally
        ``lat``/``lon``.  Defaults to ``station``, ``hour``, ``value``,
        ``lat``, ``lon``.

    Stations keep their order of first appearance.  Hours run from 0 to the
    largest hour seen.

    Raises
    ------
    ParseError
        Missing columns, non-numeric or negative fields, inconsistent coordinates.
    ConflictError
        A (station, hour) pair appears twice.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        header = [h.strip() for h in header]
        cols = {}
        for key in ("id", "time", "value"):
            if schema[key] not in header:
                raise ParseError(f"missing column {schema[key]!r}", 1)
            cols[key] = header.index(schema[key])
        has_coords = schema["lat"] in header and schema["lon"] in header
        if has_coords:
            cols["lat"] = header.index(schema["lat"])
            cols["lon"] = header.index(schema["lon"])

        order, records, coords = {}, {}, {}
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            sid = row[cols["id"]].strip()
            if not sid:
                raise ParseError("empty station id", lineno)
            try:
                hour = int(row[cols["time"]])
                value = float(row[cols["value"]])
            except ValueError:
                raise ParseError(f"malformed hour or value in {row!r}", lineno) from None
            if hour < 0:
                raise ParseError(f"negative hour {hour}", lineno)
            if not np.isfinite(value) or value < 0:
                raise ParseError(f"value must be finite and non-negative, got {value}", lineno)
            if (sid, hour) in records:
                raise ConflictError(f"duplicate record for station {sid!r}, hour {hour}", lineno)
            if has_coords:
                try:
                    ll = (float(row[cols["lat"]]), float(row[cols["lon"]]))
                except ValueError:
                    raise ParseError("malformed coordinates", lineno) from None
                if coords.setdefault(sid, ll) != ll:
                    raise ParseError(f"coordinates of station {sid!r} change", lineno)
            order.setdefault(sid, len(order))
            records[(sid, hour)] = value

    if not records:
        raise ParseError("no data rows", 2)
    n_hours = max(h for _, h in records) + 1
    values = np.zeros((len(order), n_hours))
    present = np.zeros((len(order), n_hours), dtype=bool)
    for (sid, hour), value in records.items():
        values[order[sid], hour] = value
        present[order[sid], hour] = True
    ids = tuple(order)
    lat = lon = None
    if has_coords:
        lat = np.array([coords[s][0] for s in ids])
        lon = np.array([coords[s][1] for s in ids])
    return StationTable(ids, values, lat, lon, missing=(~present).sum(axis=1))


def write_event_csv(table, path):
    """Write every (station, hour) cell, so a reload reports no missing hours."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        coords = table.lat is not None
        w.writerow(["station", "hour", "value"] + (["lat", "lon"] if coords else []))
        for s, sid in enumerate(table.station_ids):
            extra = [repr(float(table.lat[s])), repr(float(table.lon[s]))] if coords else []
            for h in range(table.n_hours):
                w.writerow([sid, h, repr(float(table.values[s, h]))] + extra)


def binarize_hourly(t, threshold=0.0):
    """1 where the value strictly exceeds ``threshold``.

    Accepts a :class:`StationTable`, a :class:`SpikeRaster` or a 2-D array.
    """
    if not threshold >= 0:
        raise InvalidInputError("threshold must be >= 0")
    if isinstance(t, StationTable):
        v = t.values
    elif isinstance(t, SpikeRaster):
        v = t.events
    else:
        v = np.asarray(t, dtype=float)
    return SpikeRaster(v > threshold)


def station_features(raster, standardize=True):
    """Per-channel (mean event probability, mean off-diagonal normalized covariance).

    Channels without events get zero for both features.  With
    ``standardize`` each column is shifted to zero mean and unit variance
    (constant columns are only centred).
    """
    if raster.n_channels < 2:
        raise InvalidInputError("need at least two channels")
    rate = raster.events.mean(axis=1)
    nc = normalized_cov(raster).values.copy()
    np.fill_diagonal(nc, 0.0)
    mean_nc = nc.sum(axis=1) / (raster.n_channels - 1)
    feats = np.column_stack([rate, mean_nc])
    if standardize:
        sd = feats.std(axis=0)
        feats = (feats - feats.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    return feats


class KMeansResult(NamedTuple):
    labels: np.ndarray
    centers: np.ndarray
    inertia_history: Tuple[float, ...]
    n_iter: int
    converged: bool


def _plusplus_init(x, k, rng):
    centers = [x[rng.integers(len(x))]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total == 0:
            # only duplicates of chosen centres remain; caller guarantees k distinct points
            idx = int(np.flatnonzero(d2 == d2.max())[0])
        else:
            idx = int(rng.choice(len(x), p=d2 / total))
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centers, dtype=float)


def _assign(x, centers):
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, float(d2[np.arange(len(x)), labels].sum())


def kmeans(features, k, seed=0, max_iter=100):
    """Lloyd's algorithm with k-means++ seeding.

    ``inertia_history[j]`` is the within-cluster sum of squares after the
    j-th assignment step; it never increases.  Empty clusters are re-seeded
    at the point farthest from its centre.

    Raises
    ------
    InvalidInputError
        ``k < 2`` or fewer than ``k`` distinct feature vectors.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or not np.all(np.isfinite(x)):
        raise InvalidInputError("features must be a finite 2-D array")
    if k < 2:
        raise InvalidInputError("k must be >= 2")
    if len(np.unique(x, axis=0)) < k:
        raise InvalidInputError(f"fewer than {k} distinct feature vectors")
    rng = np.random.default_rng(seed)
    centers = _plusplus_init(x, k, rng)
    labels, inertia = _assign(x, centers)
    history = [inertia]
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new = centers.copy()
        for j in range(k):
            members = x[labels == j]
            if len(members):
                new[j] = members.mean(axis=0)
        for j in range(k):
            if not np.any(labels == j):
                far = ((x - new[labels]) ** 2).sum(axis=1)
                i = int(far.argmax())
                new[j] = x[i]
                labels[i] = j
        new_labels, inertia = _assign(x, new)
        history.append(inertia)
        centers = new
        if np.array_equal(new_labels, labels):
            labels = new_labels
            converged = True
            break
        labels = new_labels
    return KMeansResult(labels, centers, tuple(history), n_iter, converged)


def cluster_stations(features, k, seed=0, max_iter=100):
    """Cluster labels from :func:`kmeans`."""
    return kmeans(features, k, seed, max_iter).labels


def cluster_agreement(labels, truth):
    """Fraction of points matching ``truth`` under the best relabelling of two clusters."""
    labels = np.asarray(labels)
    truth = np.asarray(truth).astype(bool)
    if labels.shape != truth.shape:
        raise InvalidInputError("labels and truth differ in length")
    if len(np.unique(labels)) > 2:
        raise InvalidInputError("agreement is defined for two clusters")
    hit = (labels == labels.max()) == truth
    return float(max(hit.mean(), 1.0 - hit.mean()))
