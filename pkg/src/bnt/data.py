"""CSV loading, cleaning, min-max scaling, and seeded train/test splits.

All functions are pure: datasets are immutable after construction and every
random operation takes an explicit seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

# Cell contents treated as missing values (UCI conventions), compared
# case-insensitively after stripping whitespace.
MISSING_MARKERS = {"", "na", "n/a", "nan", "?"}


class DataError(ValueError):
    """Raised for malformed input files or cleaning failures."""


@dataclass(frozen=True)
class Dataset:
    """Numeric design matrix plus response vector.

    ``features`` is an (n, d) float array and ``response`` has length n.
    Missing values are NaN. Columns that contained at least one
    non-numeric (text) cell at load time are listed in
    ``nonnumeric_features`` so that :func:`clean` can drop them; a cleaned
    dataset has no flags and no NaNs.
    """

    feature_names: tuple[str, ...]
    features: np.ndarray
    response: np.ndarray
    response_name: str = "y"
    nonnumeric_features: frozenset[int] = frozenset()
    response_is_nonnumeric: bool = False

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        resp = np.asarray(self.response, dtype=float)
        if feats.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if resp.ndim != 1 or resp.shape[0] != feats.shape[0]:
            raise DataError("response length must match the number of rows")
        if len(self.feature_names) != feats.shape[1]:
            raise DataError("feature_names length must match the number of columns")
        feats.flags.writeable = False
        resp.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "response", resp)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ScalingSpec:
    """Per-column (min, max) pairs for features and the response."""

    feature_min: np.ndarray
    feature_max: np.ndarray
    response_min: float
    response_max: float

    def __post_init__(self):
        fmin = np.asarray(self.feature_min, dtype=float)
        fmax = np.asarray(self.feature_max, dtype=float)
        if fmin.shape != fmax.shape or fmin.ndim != 1:
            raise DataError("feature min/max must be equal-length vectors")
        if np.any(fmin > fmax) or self.response_min > self.response_max:
            raise DataError("column min must not exceed max")
        fmin.flags.writeable = False
        fmax.flags.writeable = False
        object.__setattr__(self, "feature_min", fmin)
        object.__setattr__(self, "feature_max", fmax)

    @property
    def d(self) -> int:
        return self.feature_min.shape[0]


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int
    train_fraction: float


def _parse_cell(cell: str) -> tuple[float, bool]:
    """Parse one CSV cell. Returns (value, is_text); missing -> (nan, False)."""
    s = cell.strip()
    if s.lower() in MISSING_MARKERS:
        return math.nan, False
    try:
        v = float(s)
    except ValueError:
        return math.nan, True
    # Textual infinities are not numbers the models can use; treat as text.
    if not math.isfinite(v):
        return math.nan, True
    return v, False


def load_csv(path: str, response: str | None = None) -> Dataset:
    """Load a comma-delimited file with a header row.

    ``response`` selects the response column by name; by default the last
    column is the response. Non-numeric cells are kept as missing markers
    and their columns flagged for :func:`clean`.
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = [row for row in reader]
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    rows = [r for r in rows if r]  # ignore blank lines
    if not rows:
        raise DataError(f"empty file: {path}")
    header = [h.strip() for h in rows[0]]
    width = len(header)
    if width == 0:
        raise DataError(f"empty header: {path}")

    if response is None:
        resp_idx = width - 1
    else:
        try:
            resp_idx = header.index(response)
        except ValueError:
            raise DataError(
                f"response column {response!r} not in header {header}"
            ) from None
    if width < 2:
        raise DataError("need at least one feature column besides the response")

    values = np.empty((len(rows) - 1, width))
    text_cols: set[int] = set()
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataError(
                f"ragged row {i}: expected {width} cells, got {len(row)}"
            )
        for j, cell in enumerate(row):
            v, is_text = _parse_cell(cell)
            values[i - 2, j] = v
            if is_text:
                text_cols.add(j)
    if values.shape[0] == 0:
        raise DataError(f"no data rows in {path}")

    feat_idx = [j for j in range(width) if j != resp_idx]
    nonnum = frozenset(
        feat_idx.index(j) for j in text_cols if j != resp_idx
    )
    return Dataset(
        feature_names=tuple(header[j] for j in feat_idx),
        features=values[:, feat_idx],
        response=values[:, resp_idx],
        response_name=header[resp_idx],
        nonnumeric_features=nonnum,
        response_is_nonnumeric=resp_idx in text_cols,
    )


def clean(raw: Dataset) -> Dataset:
    """Drop text columns, then rows with any missing cell.

    The response must survive: a non-numeric or fully missing response is
    an error, as is ending up with fewer than 2 rows.
    """
    if raw.response_is_nonnumeric:
        raise DataError(f"response column {raw.response_name!r} is non-numeric")
    keep = [j for j in range(raw.d) if j not in raw.nonnumeric_features]
    if not keep:
        raise DataError("all feature columns are non-numeric")
    feats = raw.features[:, keep]
    resp = raw.response
    if np.all(np.isnan(resp)):
        raise DataError(f"response column {raw.response_name!r} is fully missing")
    row_ok = np.isfinite(resp) & np.all(np.isfinite(feats), axis=1)
    feats = feats[row_ok]
    resp = resp[row_ok]
    if feats.shape[0] < 2:
        raise DataError(f"fewer than 2 complete rows remain ({feats.shape[0]})")
    return Dataset(
        feature_names=tuple(raw.feature_names[j] for j in keep),
        features=feats,
        response=resp,
        response_name=raw.response_name,
    )


def fit_scaler(ds: Dataset) -> ScalingSpec:
    """Column-wise min/max of the training data, response included."""
    return ScalingSpec(
        feature_min=ds.features.min(axis=0),
        feature_max=ds.features.max(axis=0),
        response_min=float(ds.response.min()),
        response_max=float(ds.response.max()),
    )


def _scale_columns(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    out = np.zeros_like(x, dtype=float)
    nz = span > 0  # constant columns map to 0 everywhere
    out[..., nz] = (x[..., nz] - lo[nz]) / span[nz]
    return out


def apply_scaler(ds: Dataset, spec: ScalingSpec) -> Dataset:
    """Min-max scale by training statistics; out-of-range values extrapolate."""
    if ds.d != spec.d:
        raise DataError(f"scaler expects d={spec.d}, dataset has d={ds.d}")
    feats = _scale_columns(ds.features, spec.feature_min, spec.feature_max)
    rspan = spec.response_max - spec.response_min
    resp = (ds.response - spec.response_min) / rspan if rspan > 0 else np.zeros(ds.n)
    return replace(ds, features=feats, response=resp)


def scale_features(x: np.ndarray, spec: ScalingSpec) -> np.ndarray:
    """Scale a single feature vector or matrix of original-unit features."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.d:
        raise DataError(f"scaler expects d={spec.d}, got {x.shape[-1]}")
    return _scale_columns(x, spec.feature_min, spec.feature_max)


def invert_response(spec: ScalingSpec, yhat: np.ndarray) -> np.ndarray:
    """Map scaled predictions back to original response units."""
    yhat = np.asarray(yhat, dtype=float)
    return yhat * (spec.response_max - spec.response_min) + spec.response_min


def shuffle_split(ds: Dataset, train_fraction: float, seed: int) -> SplitPair:
    """Random 70:30-style partition, deterministic for a fixed seed."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must be in (0, 1)")
    n_train = int(round(train_fraction * ds.n))
    if n_train < 1 or ds.n - n_train < 1:
        raise DataError(
            f"split of n={ds.n} at fraction {train_fraction} leaves an empty side"
        )
    perm = np.random.default_rng(seed).permutation(ds.n)
    tr, te = perm[:n_train], perm[n_train:]
    return SplitPair(
        train=replace(ds, features=ds.features[tr], response=ds.response[tr]),
        test=replace(ds, features=ds.features[te], response=ds.response[te]),
        seed=seed,
        train_fraction=train_fraction,
    )
