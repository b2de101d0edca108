"""Dataset types, ARFF/CSV ingestion, global imputation and nominal encoding.

Values are held in a float matrix next to an explicit boolean ``missing``
mask. Nominal cells store the category index. A missing cell never relies on
a sentinel number; reading it through :meth:`Dataset.value` yields
:data:`MISSING`.
"""

from __future__ import annotations

import csv
import enum
import io
import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

__all__ = [
    "MISSING",
    "Feature",
    "FeatureSchema",
    "Dataset",
    "EncodedDataset",
    "DataError",
    "ParseError",
    "parse_arff",
    "write_arff",
    "parse_csv",
    "write_csv",
    "read_dataset",
    "GlobalImputer",
    "NominalEncoder",
    "impute_global",
    "encode",
    "decode",
]

NUMERIC_KINDS = ("numeric", "real", "integer")


class _Missing(enum.Enum):
    MISSING = "?"

    def __repr__(self) -> str:
        return "MISSING"


MISSING = _Missing.MISSING


class DataError(ValueError):
    """Invalid dataset content."""


class ParseError(DataError):
    """Malformed ARFF/CSV input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Feature:
    name: str
    categories: tuple[str, ...] | None = None

    @property
    def is_nominal(self) -> bool:
        return self.categories is not None

    @property
    def kind(self) -> str:
        return "nominal" if self.is_nominal else "numeric"


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]
    class_feature: Feature
    relation: str = "dataset"

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if self.class_feature.name in names:
            raise DataError(f"class feature {self.class_feature.name!r} is also a feature")
        for f in self.features:
            if f.is_nominal and len(f.categories) < 1:
                raise DataError(f"nominal feature {f.name!r} has no categories")
        if not self.class_feature.is_nominal or len(self.class_feature.categories) < 2:
            raise DataError("class feature must be nominal with at least 2 categories")

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def classes(self) -> tuple[str, ...]:
        return self.class_feature.categories


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix + schema + class labels.

    ``values[i, j]`` is meaningful only where ``missing[i, j]`` is False.
    """

    schema: FeatureSchema
    values: np.ndarray
    missing: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1, self.schema.n_features)
        missing = np.asarray(self.missing, dtype=bool).reshape(values.shape)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != values.shape[0]:
            raise DataError("label count does not match row count")
        n_classes = len(self.schema.classes)
        if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
            raise DataError("class label index out of range")
        values = np.where(missing, 0.0, values)
        for j, f in enumerate(self.schema.features):
            if f.is_nominal:
                col = values[~missing[:, j], j]
                if col.size and (
                    np.any(col != np.round(col)) or col.min() < 0 or col.max() >= len(f.categories)
                ):
                    raise DataError(f"category index out of range for feature {f.name!r}")
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "missing", _freeze(missing))
        object.__setattr__(self, "labels", _freeze(labels))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def value(self, i: int, j: int):
        """Cell value as float, category name, or :data:`MISSING`."""
        if self.missing[i, j]:
            return MISSING
        f = self.schema.features[j]
        if f.is_nominal:
            return f.categories[int(self.values[i, j])]
        return float(self.values[i, j])

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.labels, minlength=len(self.schema.classes))
        return {c: int(n) for c, n in zip(self.schema.classes, counts)}

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.schema, self.values[rows], self.missing[rows], self.labels[rows])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.schema == other.schema
            and np.array_equal(self.missing, other.missing)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EncodedDataset:
    """Dense numeric matrix ready for the balancer and the classifier.

    ``column_map[j]`` is ``(feature name, category or None)``; ``None`` marks a
    copied numeric column. A binary nominal maps to one column labelled with
    its second category.
    """

    matrix: np.ndarray
    labels: np.ndarray
    column_map: tuple[tuple[str, str | None], ...]
    classes: tuple[str, ...]
    onehot_groups: tuple[tuple[int, ...], ...] = ()
    binary_columns: tuple[int, ...] = ()

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2:
            matrix = matrix.reshape(-1, len(self.column_map))
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if matrix.shape[1] != len(self.column_map):
            raise DataError("column_map length does not match matrix width")
        if labels.shape[0] != matrix.shape[0]:
            raise DataError("label count does not match row count")
        object.__setattr__(self, "matrix", _freeze(matrix))
        object.__setattr__(self, "labels", _freeze(labels))
        object.__setattr__(self, "column_map", tuple(tuple(c) for c in self.column_map))
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    def with_rows(self, matrix, labels) -> "EncodedDataset":
        return EncodedDataset(
            matrix, labels, self.column_map, self.classes, self.onehot_groups, self.binary_columns
        )

    def subset(self, rows) -> "EncodedDataset":
        rows = np.asarray(rows)
        return self.with_rows(self.matrix[rows], self.labels[rows])

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.labels, minlength=len(self.classes))
        return {c: int(n) for c, n in zip(self.classes, counts)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, EncodedDataset):
            return NotImplemented
        return (
            self.column_map == other.column_map
            and self.classes == other.classes
            and np.array_equal(self.matrix, other.matrix)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


# --------------------------------------------------------------------------- ARFF

_QUOTED = re.compile(r"""\s*(?:'((?:[^'\\]|\\.)*)'|"((?:[^"\\]|\\.)*)"|([^\s,{}]+))""")


def _unquote(tok: str) -> str:
    return re.sub(r"\\(.)", r"\1", tok)


def _read_name(s: str, lineno: int) -> tuple[str, str]:
    m = _QUOTED.match(s)
    if not m or m.end() == 0:
        raise ParseError("expected a name", lineno)
    name = m.group(1) if m.group(1) is not None else m.group(2) if m.group(2) is not None else m.group(3)
    return _unquote(name), s[m.end():]


def _split_values(s: str, lineno: int) -> list[str | None]:
    """Split a comma-separated ARFF line; quoted tokens keep their content.

    Returns ``None`` for an unquoted ``?``.
    """
    out: list[str | None] = []
    i, n = 0, len(s)
    while True:
        while i < n and s[i] in " \t":
            i += 1
        if i < n and s[i] in "'\"":
            q = s[i]
            i += 1
            buf = []
            while i < n and s[i] != q:
                if s[i] == "\\" and i + 1 < n:
                    i += 1
                buf.append(s[i])
                i += 1
            if i >= n:
                raise ParseError("unterminated quoted value", lineno)
            i += 1
            out.append("".join(buf))
            while i < n and s[i] in " \t":
                i += 1
        else:
            j = s.find(",", i)
            j = n if j < 0 else j
            tok = s[i:j].strip()
            out.append(None if tok == "?" else tok)
            i = j
        if i >= n:
            return out
        if s[i] != ",":
            raise ParseError(f"unexpected character {s[i]!r}", lineno)
        i += 1


def _parse_attribute(rest: str, lineno: int) -> Feature:
    name, tail = _read_name(rest, lineno)
    tail = tail.strip()
    if not tail:
        raise ParseError(f"attribute {name!r} has no type", lineno)
    if tail.startswith("{"):
        if not tail.endswith("}"):
            raise ParseError(f"unterminated category list for {name!r}", lineno)
        inner = tail[1:-1].strip()
        cats = tuple(c for c in _split_values(inner, lineno) if c is not None) if inner else ()
        if not cats:
            raise ParseError(f"nominal attribute {name!r} has no categories", lineno)
        if len(set(cats)) != len(cats):
            raise ParseError(f"duplicate category in {name!r}", lineno)
        return Feature(name, cats)
    kind = tail.split()[0].lower()
    if kind in NUMERIC_KINDS:
        return Feature(name)
    raise ParseError(f"unsupported attribute type {tail.split()[0]!r} for {name!r}", lineno)


def _build_schema(attrs: list[Feature], relation: str, lineno: int | None) -> FeatureSchema:
    if len(attrs) < 2:
        raise ParseError("need at least one feature and a class attribute", lineno)
    try:
        return FeatureSchema(tuple(attrs[:-1]), attrs[-1], relation)
    except DataError as exc:
        raise ParseError(str(exc), lineno) from None


def parse_arff(text: str | Iterable[str]) -> Dataset:
    """Parse an ARFF document. The last attribute is the class."""
    lines = text.splitlines() if isinstance(text, str) else [l.rstrip("\n") for l in text]
    relation = None
    attrs: list[Feature] = []
    attr_lines: list[int] = []
    schema = None
    in_data = False
    values: list[list[float]] = []
    missing: list[list[bool]] = []
    labels: list[int] = []
    lookup: list[dict[str, int] | None] = []
    class_lookup: dict[str, int] = {}
    last_header_line = 0

    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        if not in_data:
            last_header_line = lineno
            head, *tail = s.split(None, 1)
            rest = tail[0] if tail else ""
            key = head.lower()
            if key == "@relation":
                if relation is not None:
                    raise ParseError("duplicate @relation", lineno)
                relation = _read_name(rest, lineno)[0] if rest.strip() else ""
            elif key == "@attribute":
                if relation is None:
                    raise ParseError("@attribute before @relation", lineno)
                attrs.append(_parse_attribute(rest.strip(), lineno))
                attr_lines.append(lineno)
            elif key == "@data":
                if relation is None:
                    raise ParseError("missing @relation", lineno)
                schema = _build_schema(attrs, relation, lineno)
                lookup = [
                    {c: i for i, c in enumerate(f.categories)} if f.is_nominal else None
                    for f in schema.features
                ]
                class_lookup = {c: i for i, c in enumerate(schema.classes)}
                in_data = True
            else:
                raise ParseError(f"unexpected header line {s[:40]!r}", lineno)
            continue

        if s.startswith("{"):
            raise ParseError("sparse ARFF rows are not supported", lineno)
        toks = _split_values(s, lineno)
        if len(toks) != len(attrs):
            raise ParseError(f"expected {len(attrs)} values, found {len(toks)}", lineno)
        row_v, row_m = [], []
        for j, tok in enumerate(toks[:-1]):
            if tok is None:
                row_v.append(0.0)
                row_m.append(True)
                continue
            row_m.append(False)
            lk = lookup[j]
            if lk is None:
                try:
                    row_v.append(float(tok))
                except ValueError:
                    raise ParseError(
                        f"non-numeric value {tok!r} for numeric attribute {attrs[j].name!r}", lineno
                    ) from None
            else:
                if tok not in lk:
                    raise ParseError(
                        f"undeclared category {tok!r} for attribute {attrs[j].name!r}", lineno
                    )
                row_v.append(float(lk[tok]))
        cls = toks[-1]
        if cls is None:
            raise ParseError("class value is missing", lineno)
        if cls not in class_lookup:
            raise ParseError(f"undeclared class {cls!r}", lineno)
        values.append(row_v)
        missing.append(row_m)
        labels.append(class_lookup[cls])

    if not in_data:
        if relation is None:
            raise ParseError("missing @relation", last_header_line or None)
        raise ParseError("missing @data section", last_header_line or None)
    if not values:
        raise ParseError("empty data section", last_header_line or None)
    return Dataset(schema, np.array(values), np.array(missing), np.array(labels))


_SAFE_TOKEN = re.compile(r"^[^\s,{}'\"%?]+$")


def _quote(tok: str) -> str:
    if _SAFE_TOKEN.match(tok):
        return tok
    return "'" + tok.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _fmt_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_arff(d: Dataset) -> str:
    """Serialise to ARFF text with LF line endings."""
    out = [f"@relation {_quote(d.schema.relation or 'dataset')}", ""]
    for f in (*d.schema.features, d.schema.class_feature):
        if f.is_nominal:
            out.append(f"@attribute {_quote(f.name)} {{{','.join(_quote(c) for c in f.categories)}}}")
        else:
            out.append(f"@attribute {_quote(f.name)} numeric")
    out += ["", "@data"]
    classes = d.schema.classes
    for i in range(d.n_rows):
        toks = []
        for j in range(d.schema.n_features):
            v = d.value(i, j)
            if v is MISSING:
                toks.append("?")
            elif isinstance(v, str):
                toks.append(_quote(v))
            else:
                toks.append(_fmt_number(v))
        toks.append(_quote(classes[d.labels[i]]))
        out.append(",".join(toks))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------- CSV


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_csv(text: str, class_column: str | int = -1, relation: str = "dataset") -> Dataset:
    """Parse a headed CSV file.

    A column is numeric when every non-missing cell parses as a number;
    otherwise nominal, with categories in order of first appearance. Empty
    cells and ``?`` are missing.
    """
    rows = list(csv.reader(io.StringIO(text)))
    rows = [(n, r) for n, r in enumerate(rows, start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty CSV input", 1)
    _, header = rows[0]
    header = [h.strip() for h in header]
    width = len(header)
    body = rows[1:]
    if not body:
        raise ParseError("empty data section", rows[0][0])
    for lineno, r in body:
        if len(r) != width:
            raise ParseError(f"row has {len(r)} fields, header has {width}", lineno)

    if isinstance(class_column, str) and not _is_int(class_column):
        if class_column not in header:
            raise ParseError(f"class column {class_column!r} not found")
        cidx = header.index(class_column)
    else:
        cidx = int(class_column)
        if not -width <= cidx < width:
            raise ParseError(f"class column index {cidx} out of range")
        cidx %= width

    cells = [[c.strip() for c in r] for _, r in body]
    features = []
    columns = []
    for j, name in enumerate(header):
        col = [r[j] for r in cells]
        present = [c for c in col if c not in ("", "?")]
        if j == cidx:
            if len(present) != len(col):
                bad = next(body[i][0] for i, c in enumerate(col) if c in ("", "?"))
                raise ParseError("class value is missing", bad)
            continue
        if not present:
            raise ParseError(f"column {name!r} has no non-missing values")
        if all(_is_number(c) for c in present):
            features.append(Feature(name))
        else:
            features.append(Feature(name, tuple(dict.fromkeys(present))))
        columns.append((j, col))

    class_cats = tuple(dict.fromkeys(r[cidx] for r in cells))
    if len(class_cats) < 2:
        # a single observed class still needs a two-category schema
        class_cats = class_cats + (f"not_{class_cats[0]}",)
    try:
        schema = FeatureSchema(tuple(features), Feature(header[cidx], class_cats), relation)
    except DataError as exc:
        raise ParseError(str(exc)) from None

    n = len(cells)
    values = np.zeros((n, len(features)))
    miss = np.zeros((n, len(features)), dtype=bool)
    for k, (f, (_, col)) in enumerate(zip(features, columns)):
        index = {c: i for i, c in enumerate(f.categories)} if f.is_nominal else None
        for i, c in enumerate(col):
            if c in ("", "?"):
                miss[i, k] = True
            else:
                values[i, k] = index[c] if index is not None else float(c)
    cmap = {c: i for i, c in enumerate(class_cats)}
    labels = np.array([cmap[r[cidx]] for r in cells])
    return Dataset(schema, values, miss, labels)


def _is_int(s: str) -> bool:
    return bool(re.fullmatch(r"-?\d+", s.strip()))


def write_csv(d: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f.name for f in d.schema.features] + [d.schema.class_feature.name])
    for i in range(d.n_rows):
        row = []
        for j in range(d.schema.n_features):
            v = d.value(i, j)
            row.append("?" if v is MISSING else v if isinstance(v, str) else _fmt_number(v))
        row.append(d.schema.classes[d.labels[i]])
        w.writerow(row)
    return buf.getvalue()


def read_dataset(path, fmt: str | None = None, class_column: str | int = -1) -> Dataset:
    """Load a dataset file; format defaults to the file extension."""
    from pathlib import Path

    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    text = path.read_text(encoding="utf-8")
    if fmt == "arff":
        return parse_arff(text)
    if fmt == "csv":
        return parse_csv(text, class_column, relation=path.stem)
    raise DataError(f"unknown dataset format {fmt!r}")


# ----------------------------------------------------------------- preprocessing


class GlobalImputer(TransformerMixin, BaseEstimator):
    """Replace missing cells with the feature mean (numeric) or mode (nominal).

    Statistics come from the whole dataset passed to :meth:`fit`, pooled over
    classes. Mode ties resolve to the lowest category index; an all-missing
    feature falls back to 0 / category 0.
    """

    def fit(self, d: Dataset, y=None):
        fill = np.zeros(d.schema.n_features)
        for j, f in enumerate(d.schema.features):
            present = d.values[~d.missing[:, j], j]
            if present.size == 0:
                continue
            if f.is_nominal:
                counts = np.bincount(present.astype(np.int64), minlength=len(f.categories))
                fill[j] = float(np.argmax(counts))
            else:
                fill[j] = present.mean()
        self.schema_ = d.schema
        self.fill_values_ = fill
        return self

    def transform(self, d: Dataset) -> Dataset:
        check_is_fitted(self, "fill_values_")
        if d.schema != self.schema_:
            raise DataError("dataset schema differs from the one seen in fit")
        if not d.missing.any():
            return d
        values = np.where(d.missing, self.fill_values_[None, :], d.values)
        return Dataset(d.schema, values, np.zeros_like(d.missing), d.labels)


class NominalEncoder(TransformerMixin, BaseEstimator):
    """Map a :class:`Dataset` to an :class:`EncodedDataset`.

    Numeric features are copied. A two-category nominal becomes one 0/1
    column (category index 1 -> 1.0); a k>2 nominal becomes k one-hot columns.
    """

    def fit(self, d: Dataset, y=None):
        column_map: list[tuple[str, str | None]] = []
        groups, binary = [], []
        for f in d.schema.features:
            if not f.is_nominal:
                column_map.append((f.name, None))
            elif len(f.categories) <= 2:
                if len(f.categories) == 2:
                    binary.append(len(column_map))
                column_map.append((f.name, f.categories[-1]))
            else:
                start = len(column_map)
                column_map.extend((f.name, c) for c in f.categories)
                groups.append(tuple(range(start, len(column_map))))
        self.schema_ = d.schema
        self.column_map_ = tuple(column_map)
        self.onehot_groups_ = tuple(groups)
        self.binary_columns_ = tuple(binary)
        return self

    def transform(self, d: Dataset) -> EncodedDataset:
        check_is_fitted(self, "column_map_")
        if d.schema != self.schema_:
            raise DataError("dataset schema differs from the one seen in fit")
        if d.missing.any():
            i, j = map(int, np.argwhere(d.missing)[0])
            raise DataError(
                f"missing value in feature {d.schema.features[j].name!r} at row {i}; impute first"
            )
        cols = []
        for j, f in enumerate(d.schema.features):
            v = d.values[:, j]
            if not f.is_nominal:
                cols.append(v[:, None])
            elif len(f.categories) == 1:
                cols.append(np.zeros((d.n_rows, 1)))
            elif len(f.categories) == 2:
                cols.append(v[:, None])
            else:
                cols.append(np.eye(len(f.categories))[v.astype(np.int64)])
        matrix = np.hstack(cols) if cols else np.zeros((d.n_rows, 0))
        return EncodedDataset(
            matrix,
            d.labels,
            self.column_map_,
            d.schema.classes,
            self.onehot_groups_,
            self.binary_columns_,
        )

    def inverse_transform(self, e: EncodedDataset) -> Dataset:
        """Map encoded rows back onto the schema seen in :meth:`fit`.

        One-hot groups decode by argmax, binary columns by thresholding at 0.5.
        """
        check_is_fitted(self, "column_map_")
        return decode(e, self.schema_)


def impute_global(d: Dataset) -> Dataset:
    return GlobalImputer().fit(d).transform(d)


def encode(d: Dataset) -> EncodedDataset:
    return NominalEncoder().fit(d).transform(d)


def decode(e: EncodedDataset, schema: FeatureSchema) -> Dataset:
    """Inverse of :func:`encode` using ``column_map`` to locate each feature."""
    positions: dict[str, list[int]] = {}
    for k, (name, _) in enumerate(e.column_map):
        positions.setdefault(name, []).append(k)
    values = np.zeros((e.n_rows, schema.n_features))
    for j, f in enumerate(schema.features):
        if f.name not in positions:
            raise DataError(f"feature {f.name!r} not present in encoded columns")
        cols = positions[f.name]
        block = e.matrix[:, cols]
        if not f.is_nominal:
            values[:, j] = block[:, 0]
        elif len(f.categories) == 1:
            values[:, j] = 0.0
        elif len(f.categories) == 2:
            values[:, j] = (block[:, 0] >= 0.5).astype(float)
        else:
            values[:, j] = np.argmax(block, axis=1)
    if tuple(e.classes) != schema.classes:
        raise DataError("encoded classes differ from schema classes")
    return Dataset(schema, values, np.zeros_like(values, dtype=bool), e.labels)
