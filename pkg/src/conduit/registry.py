"""Jurisdiction registries, withholding-rate matrices and their validation.

Everything external enters through this module.  Rates are held as integer
micro-percent (``1`` = 0.000001 %) so that downstream weight arithmetic never
touches floating point.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path

import numpy as np

#: Fixed-point units per percent.
SCALE = 1_000_000
MAX_RATE_UNITS = 100 * SCALE
#: Marker for a cell that holds no rate (diagonal, or missing in a draft).
NO_RATE = -1


class IngestError(Exception):
    """Structural problem with an input file (bad header, unknown code...)."""


class RegistryError(IngestError):
    pass


class RateMatrixError(IngestError):
    """Raised when a matrix file parses but its cells do not validate."""

    def __init__(self, report: ValidationReport, path: str | None = None):
        self.report = report
        self.path = path
        first = report.errors[0]
        where = f"{path}: " if path else ""
        more = f" (+{len(report.errors) - 1} more)" if len(report.errors) > 1 else ""
        super().__init__(f"{where}line {first.row}, column {first.column}: {first.message}{more}")


class IncomeType(str, enum.Enum):
    DIVIDENDS = "dividends"
    INTEREST = "interest"
    ROYALTIES = "royalties"

    @classmethod
    def parse(cls, value: str | IncomeType) -> IncomeType:
        if isinstance(value, IncomeType):
            return value
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown income type {value!r}; expected one of "
                + ", ".join(m.value for m in cls)
            ) from None


def rate_to_units(text: str | Decimal | int) -> int:
    """Encode a decimal percent string as exact micro-percent units.

    Raises ``ValueError`` for non-numeric input, more than six decimal places,
    or values outside [0, 100].
    """
    try:
        value = text if isinstance(text, Decimal) else Decimal(str(text).strip())
    except InvalidOperation:
        raise ValueError(f"not a number: {text!r}") from None
    if not value.is_finite():
        raise ValueError(f"not a finite number: {text!r}")
    scaled = value * SCALE
    if scaled != scaled.to_integral_value():
        raise ValueError(f"more than 6 decimal places: {text!r}")
    units = int(scaled)
    if units < 0:
        raise ValueError(f"negative rate: {text!r}")
    if units > MAX_RATE_UNITS:
        raise ValueError(f"rate above 100: {text!r}")
    return units


def units_to_rate(units: int) -> Decimal:
    """Inverse of :func:`rate_to_units`; returns a normalized ``Decimal``."""
    q = Decimal(int(units)).scaleb(-6)
    # normalize() yields '2E+1' for 20; quantize back to a plain exponent
    q = q.normalize()
    return q.quantize(Decimal(1)) if q == q.to_integral_value() else q


def format_rate(units: int) -> str:
    """Shortest plain decimal string for a rate (``20``, ``12.5``)."""
    return format(units_to_rate(units), "f")


# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class JurisdictionRegistry:
    entries: tuple[tuple[str, str], ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for k, (code, _name) in enumerate(self.entries):
            if not code or any(ch.isspace() for ch in code):
                raise RegistryError(f"invalid code {code!r} at entry {k + 1}")
            if code in index:
                raise RegistryError(f"duplicate code {code!r}")
            index[code] = k
        if not index:
            raise RegistryError("empty registry")
        object.__setattr__(self, "index", index)

    @classmethod
    def from_codes(cls, codes, names=None) -> JurisdictionRegistry:
        names = list(codes) if names is None else list(names)
        return cls(tuple(zip(codes, names)))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def codes(self) -> list[str]:
        return [c for c, _ in self.entries]

    def code(self, vid: int) -> str:
        return self.entries[vid][0]

    def name(self, vid: int) -> str:
        return self.entries[vid][1]

    def id(self, code: str) -> int:
        try:
            return self.index[code]
        except KeyError:
            raise KeyError(code) from None

    def __len__(self):
        return len(self.entries)

    def __contains__(self, code):
        return code in self.index

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["code", "name"])
        w.writerows(self.entries)
        return buf.getvalue()


def _read_text(path) -> str:
    with open(path, encoding="utf-8-sig", newline="") as fh:
        return fh.read()


def load_registry(path) -> JurisdictionRegistry:
    """Read a ``code,name`` CSV.  Ids follow file order."""
    rows = list(csv.reader(io.StringIO(_read_text(path))))
    if not rows:
        raise RegistryError(f"{path}: empty registry")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["code", "name"]:
        raise RegistryError(f"{path}: line 1: expected header 'code,name', got {','.join(rows[0])!r}")
    entries = []
    seen: dict[str, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise RegistryError(f"{path}: line {lineno}: expected 2 columns")
        code, name = row[0].strip(), row[1].strip()
        if not code or any(ch.isspace() for ch in code):
            raise RegistryError(f"{path}: line {lineno}: invalid code {row[0]!r}")
        if code in seen:
            raise RegistryError(
                f"{path}: duplicate code {code!r} on lines {seen[code]} and {lineno}"
            )
        seen[code] = lineno
        entries.append((code, name))
    if not entries:
        raise RegistryError(f"{path}: empty registry")
    return JurisdictionRegistry(tuple(entries))


def default_registry() -> JurisdictionRegistry:
    """The 165-jurisdiction registry shipped with the package."""
    ref = resources.files("conduit") / "data" / "jurisdictions.csv"
    with resources.as_file(ref) as p:
        return load_registry(p)


# --------------------------------------------------------------------------
# rate matrix


@dataclass(frozen=True)
class RateMatrix:
    """Per-income-type ``n x n`` withholding rates.

    ``units[i, j]`` is the rate from payer ``i`` to recipient ``j`` in
    micro-percent.  The diagonal holds :data:`NO_RATE` and is not addressable
    through :meth:`rate`.  A matrix produced by :func:`parse_rate_matrix` is
    always complete; hand-built drafts may hold ``NO_RATE`` off the diagonal
    and are caught by :func:`validate`.
    """

    income_type: IncomeType
    units: np.ndarray

    def __post_init__(self):
        u = np.array(self.units, dtype=np.int64, copy=True)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError("rate matrix must be square")
        np.fill_diagonal(u, NO_RATE)
        u.setflags(write=False)
        object.__setattr__(self, "units", u)
        object.__setattr__(self, "income_type", IncomeType.parse(self.income_type))

    @classmethod
    def from_rates(cls, rates, income_type=IncomeType.DIVIDENDS) -> RateMatrix:
        """Build from nested percent values; ``None`` marks a missing cell."""
        rows = [list(r) for r in rates]
        n = len(rows)
        u = np.full((n, n), NO_RATE, dtype=np.int64)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise ValueError("rate matrix must be square")
            for j, v in enumerate(row):
                if i != j and v is not None:
                    u[i, j] = rate_to_units(v)
        return cls(income_type, u)

    @property
    def n(self) -> int:
        return self.units.shape[0]

    def rate(self, i: int, j: int) -> Decimal:
        if i == j:
            raise IndexError("diagonal rates are undefined")
        u = int(self.units[i, j])
        if u == NO_RATE:
            raise LookupError(f"missing rate ({i}, {j})")
        return units_to_rate(u)

    def __eq__(self, other):
        if not isinstance(other, RateMatrix):
            return NotImplemented
        return self.income_type == other.income_type and np.array_equal(self.units, other.units)

    def __hash__(self):
        return hash((self.income_type, self.units.tobytes()))


@dataclass(frozen=True)
class Problem:
    row: int
    column: int
    message: str

    def __str__(self):
        return f"line {self.row}, column {self.column}: {self.message}"


@dataclass
class ValidationReport:
    errors: list[Problem] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def extend(self, other: ValidationReport):
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)

    def render(self) -> str:
        lines = [f"error: {p}" for p in self.errors]
        lines += [f"warning: {loc}: {msg}" for loc, msg in self.warnings]
        return "\n".join(lines)


def validate(matrix: RateMatrix, registry: JurisdictionRegistry) -> ValidationReport:
    """Check completeness and ranges.  Coordinates are 1-based file positions
    (row ``i`` of the matrix is line ``i + 2``, column ``j`` is field ``j + 2``).
    """
    report = ValidationReport()
    n = matrix.n
    if n != registry.n:
        report.errors.append(Problem(0, 0, f"matrix has {n} rows, registry has {registry.n}"))
        return report
    u = matrix.units
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            v = int(u[i, j])
            where = f"{registry.code(i)}->{registry.code(j)}"
            if v == NO_RATE:
                report.errors.append(Problem(i + 2, j + 2, f"missing rate {where}"))
            elif v < 0 or v > MAX_RATE_UNITS:
                report.errors.append(Problem(i + 2, j + 2, f"rate out of range {where}"))
    for i in range(n):
        if n > 1 and all(int(u[i, j]) == 0 for j in range(n) if j != i):
            report.warnings.append(
                (f"row {registry.code(i)}",
                 f"all rates zero for source {registry.code(i)} (no withholding tax)")
            )
    return report


def read_rate_cells(path, registry: JurisdictionRegistry, income_type) -> tuple[RateMatrix, ValidationReport]:
    """Parse a matrix file without rejecting bad cells.

    Structural problems raise :class:`IngestError`; cell problems are collected
    in the returned report and the offending cells are left as ``NO_RATE``.
    """
    text = _read_text(path)
    rows = list(csv.reader(io.StringIO(text)))
    while rows and not any(c.strip() for c in rows[-1]):
        rows.pop()
    if not rows:
        raise IngestError(f"{path}: empty matrix file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise IngestError(f"{path}: line 1: header must list destination codes")
    col_ids = []
    for c, code in enumerate(header[1:], start=2):
        if code not in registry:
            raise IngestError(f"{path}: line 1, column {c}: unknown code {code!r}")
        col_ids.append(registry.id(code))
    if len(set(col_ids)) != len(col_ids):
        raise IngestError(f"{path}: line 1: duplicate destination code")
    if sorted(col_ids) != list(range(registry.n)):
        missing = sorted(set(range(registry.n)) - set(col_ids))
        raise IngestError(
            f"{path}: line 1: header lacks codes " + ", ".join(registry.code(k) for k in missing)
        )

    n = registry.n
    units = np.full((n, n), NO_RATE, dtype=np.int64)
    report = ValidationReport()
    seen_rows: dict[int, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not any(c.strip() for c in row):
            continue
        src = row[0].strip()
        if src not in registry:
            raise IngestError(f"{path}: line {lineno}, column 1: unknown code {src!r}")
        i = registry.id(src)
        if i in seen_rows:
            raise IngestError(f"{path}: line {lineno}: duplicate source row {src!r} (first on line {seen_rows[i]})")
        seen_rows[i] = lineno
        if len(row) - 1 != len(col_ids):
            raise IngestError(
                f"{path}: line {lineno}: expected {len(col_ids)} cells, got {len(row) - 1}"
            )
        for col, (cell, j) in enumerate(zip(row[1:], col_ids), start=2):
            cell = cell.strip()
            if i == j:
                if cell:
                    report.errors.append(Problem(lineno, col, f"diagonal cell must be empty, got {cell!r}"))
                continue
            if not cell:
                report.errors.append(Problem(lineno, col, f"missing rate {src}->{registry.code(j)}"))
                continue
            try:
                units[i, j] = rate_to_units(cell)
            except ValueError as exc:
                report.errors.append(Problem(lineno, col, str(exc)))
    for k in range(n):
        if k not in seen_rows:
            report.errors.append(Problem(len(rows) + 1, 1, f"missing source row {registry.code(k)}"))
    return RateMatrix(IncomeType.parse(income_type), units), report


def parse_rate_matrix(path, registry: JurisdictionRegistry, income_type) -> RateMatrix:
    matrix, report = read_rate_cells(path, registry, income_type)
    if report.ok:
        # cell-level problems were already reported with file coordinates
        report.extend(validate(matrix, registry))
    if not report.ok:
        raise RateMatrixError(report, str(path))
    return matrix


def serialize_rate_matrix(matrix: RateMatrix, registry: JurisdictionRegistry) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source\\dest", *registry.codes])
    for i in range(matrix.n):
        w.writerow(
            [registry.code(i)]
            + ["" if i == j else format_rate(int(matrix.units[i, j])) for j in range(matrix.n)]
        )
    return buf.getvalue()


def write_rate_matrix(path, matrix: RateMatrix, registry: JurisdictionRegistry) -> None:
    Path(path).write_text(serialize_rate_matrix(matrix, registry), encoding="utf-8")


# --------------------------------------------------------------------------
# synthetic fixtures


class Profile(str, enum.Enum):
    UNIFORM = "uniform"
    PLANTED = "planted_communities"
    ZERO_HEAVY = "zero_heavy"


#: planted_communities draws intra-block rates from here ...
PLANTED_INTRA = (6, 7, 8, 9, 10)
#: ... and inter-block rates from here, so any threshold in [10, 15) separates them.
PLANTED_INTER = (15, 20, 25, 30)


def planted_blocks(n: int, blocks: int = 3) -> list[int]:
    """Block label of each vertex for the planted profile (contiguous, near-equal)."""
    return [k * blocks // n for k in range(n)]


def generate_synthetic(n: int, seed: int, profile="uniform", *, blocks: int = 3,
                       income_type=IncomeType.DIVIDENDS) -> RateMatrix:
    """Deterministic synthetic rate matrix.

    ``uniform`` draws integer rates 0..30; ``planted_communities`` uses
    :data:`PLANTED_INTRA` inside blocks and :data:`PLANTED_INTER` across them;
    ``zero_heavy`` zeroes 60 % of the cells (rounded up) and draws the rest
    from 1..30.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    profile = Profile(profile)
    rng = np.random.default_rng(seed)
    off = ~np.eye(n, dtype=bool)
    if profile is Profile.UNIFORM:
        rates = rng.integers(0, 31, size=(n, n))
    elif profile is Profile.PLANTED:
        if not 1 <= blocks <= n:
            raise ValueError("blocks must be between 1 and n")
        label = np.array(planted_blocks(n, blocks))
        same = label[:, None] == label[None, :]
        intra = rng.choice(PLANTED_INTRA, size=(n, n))
        inter = rng.choice(PLANTED_INTER, size=(n, n))
        rates = np.where(same, intra, inter)
    else:
        rates = rng.integers(1, 31, size=(n, n))
        cells = np.flatnonzero(off)
        k = -(-len(cells) * 3 // 5)
        rates.flat[rng.permutation(cells)[:k]] = 0
    units = np.where(off, rates.astype(np.int64) * SCALE, NO_RATE)
    return RateMatrix(IncomeType.parse(income_type), units)
