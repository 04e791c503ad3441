"""Per-gas absorptivity spectra on a shared wavelength grid.

Absorptivities are in uM^-1 cm^-1, so absorbance ``eps * c * L`` is
dimensionless for concentration ``c`` in uM and path length ``L`` in cm.
Libraries come either from a deterministic Lorentzian-line fixture
generator or from a cross-section CSV file.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._seeding import substream

DEFAULT_GASES = ("C2H6", "CH4", "CO", "H2O", "HBr", "HCl", "HF", "N2O", "NO")

# fixture line-shape ranges
MIN_LINES, MAX_LINES = 5, 20
HWHM_RANGE_UM = (0.001, 0.004)
MIN_RELATIVE_STRENGTH = 0.01
PEAK_ABSORBANCE_RANGE = (0.1, 2.0)
REFERENCE_CONC_UM = 10.0
REFERENCE_PATH_CM = 10.0


class LibraryFormatError(ValueError):
    """Raised when a cross-section file cannot be parsed into a library."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WavelengthGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("wavelength grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("wavelength grid contains non-finite values")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("wavelength grid must be strictly increasing")
        object.__setattr__(self, "points", _frozen(pts))

    @classmethod
    def uniform(cls, start: float = 1.0, stop: float = 7.0, count: int = 1000) -> "WavelengthGrid":
        return cls(np.linspace(start, stop, count))

    @property
    def count(self) -> int:
        return int(self.points.size)

    def __eq__(self, other):
        return isinstance(other, WavelengthGrid) and np.array_equal(self.points, other.points)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GasLibrary:
    """Ordered gas roster with one absorptivity curve per gas.

    ``absorptivity`` has shape ``(n_gases, grid.count)``.
    """

    grid: WavelengthGrid
    names: tuple
    absorptivity: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        eps = np.asarray(self.absorptivity, dtype=float)
        if eps.ndim != 2 or eps.shape != (len(names), self.grid.count):
            raise ValueError(
                f"absorptivity shape {eps.shape} does not match "
                f"({len(names)} gases, {self.grid.count} points)"
            )
        if len(set(names)) != len(names):
            raise ValueError("gas names must be unique")
        if not np.all(np.isfinite(eps)) or np.any(eps < 0):
            raise ValueError("absorptivities must be finite and non-negative")
        empty = [n for n, row in zip(names, eps) if not np.any(row > 0)]
        if empty:
            raise ValueError(f"gases with no positive absorptivity: {empty}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "absorptivity", _frozen(eps))

    @property
    def n_gases(self) -> int:
        return len(self.names)

    def curve(self, name: str) -> np.ndarray:
        return self.absorptivity[self.names.index(name)]

    def __eq__(self, other):
        return (
            isinstance(other, GasLibrary)
            and self.grid == other.grid
            and self.names == other.names
            and np.array_equal(self.absorptivity, other.absorptivity)
        )

    __hash__ = None


def gas_names(n_gases: int) -> tuple:
    extra = tuple(f"GAS{i + 1}" for i in range(len(DEFAULT_GASES), n_gases))
    return (DEFAULT_GASES + extra)[:n_gases]


def lorentzian(x: np.ndarray, center: float, hwhm: float) -> np.ndarray:
    """Unit-peak Lorentzian profile."""
    return 1.0 / (1.0 + ((x - center) / hwhm) ** 2)


def generate_fixture_library(seed: int, n_gases: int = 9, grid: WavelengthGrid | None = None) -> GasLibrary:
    """Build a deterministic library of Lorentzian-line spectra.

    Each gas gets 5-20 lines with centers inside the grid range and
    log-uniform relative strengths in [0.01, 1], so a few strong lines
    dominate as in real line lists. The curve is then scaled so that its
    peak absorbance at 10 uM over a 10 cm path is log-uniform in [0.1, 2.0].
    """
    if n_gases < 1:
        raise ValueError(f"n_gases must be >= 1, got {n_gases}")
    if grid is None:
        grid = WavelengthGrid.uniform()
    if grid.count == 0:
        raise ValueError("empty wavelength grid")
    x = grid.points
    lo, hi = float(x[0]), float(x[-1])
    curves = []
    for g in range(n_gases):
        rng = substream(seed, "fixture-gas", g)
        n_lines = int(rng.integers(MIN_LINES, MAX_LINES + 1))
        centers = rng.uniform(lo, hi, n_lines)
        widths = rng.uniform(*HWHM_RANGE_UM, n_lines)
        strengths = np.exp(rng.uniform(np.log(MIN_RELATIVE_STRENGTH), 0.0, n_lines))
        peak = np.exp(rng.uniform(*np.log(PEAK_ABSORBANCE_RANGE)))
        profile = np.zeros_like(x)
        for c, w, s in zip(centers, widths, strengths):
            profile += s * lorentzian(x, c, w)
        eps_max = peak / (REFERENCE_CONC_UM * REFERENCE_PATH_CM)
        curves.append(profile * (eps_max / profile.max()))
    return GasLibrary(grid, gas_names(n_gases), np.vstack(curves))


def library_hash(lib: GasLibrary) -> str:
    h = hashlib.sha256()
    h.update("\x1f".join(lib.names).encode("utf-8"))
    h.update(np.ascontiguousarray(lib.grid.points, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(lib.absorptivity, dtype="<f8").tobytes())
    return h.hexdigest()


def save_library(lib: GasLibrary, path) -> Path:
    """Write ``lib`` in the cross-section CSV format.

    Floats are written with ``repr`` so that loading is exact.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["wavelength_um", *lib.names])
        for i, wl in enumerate(lib.grid.points):
            w.writerow([repr(float(wl)), *(repr(float(v)) for v in lib.absorptivity[:, i])])
    return path


def load_library(path) -> GasLibrary:
    """Read a cross-section CSV into a :class:`GasLibrary`.

    Row numbers in error messages count data rows from 1 (the header is
    row 0); column numbers count from 1.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"cross-section file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise LibraryFormatError(f"{path}: empty file, header row is mandatory")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "wavelength_um":
        raise LibraryFormatError(
            f"{path}: malformed header, expected 'wavelength_um' followed by gas names"
        )
    names = header[1:]
    if any(not n for n in names) or len(set(names)) != len(names):
        raise LibraryFormatError(f"{path}: gas names in header must be non-empty and unique")

    width = len(header)
    data = rows[1:]
    values = np.empty((len(data), width))
    for r, row in enumerate(data, start=1):
        if len(row) != width:
            raise LibraryFormatError(f"{path}: row {r} has {len(row)} fields, expected {width}")
        for col, field in enumerate(row, start=1):
            try:
                v = float(field)
            except ValueError:
                raise LibraryFormatError(
                    f"{path}: row {r}, column {col}: not a number: {field!r}"
                ) from None
            if not math.isfinite(v):
                raise LibraryFormatError(f"{path}: row {r}, column {col}: non-finite value")
            if col > 1 and v < 0:
                raise LibraryFormatError(
                    f"{path}: row {r}, column {col} ({names[col - 2]}): negative absorptivity {v}"
                )
            values[r - 1, col - 1] = v
        if r > 1 and values[r - 1, 0] <= values[r - 2, 0]:
            raise LibraryFormatError(f"{path}: row {r}: wavelengths must be strictly increasing")
    if len(data) < 2:
        raise LibraryFormatError(f"{path}: need at least 2 wavelength rows, got {len(data)}")
    try:
        return GasLibrary(WavelengthGrid(values[:, 0]), tuple(names), values[:, 1:].T)
    except ValueError as exc:
        raise LibraryFormatError(f"{path}: {exc}") from exc
