"""Synthetic multi-gas absorbance datasets.

Concentrations are drawn either independently (uniform on 0-10 uM) or with
block correlation: three subsets of three gases, sampled from a
multivariate normal with covariance ``L @ L.T`` and mapped to uniform
marginals through the in-sample empirical CDF. Each gas is then present in
half of the samples. Spectra follow the Beer-Lambert law with Gaussian
noise added to transmitted intensity.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from ._seeding import substream
from .gaslib import GasLibrary, generate_fixture_library, library_hash, load_library, WavelengthGrid

FORMAT_VERSION = 1
MAX_CONC_UM = 10.0
DEFAULT_PATH_CM = 10.0
INTENSITY_FLOOR = 1e-6
NOISE_CHUNK_ROWS = 512
MODES = ("independent", "correlated")


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    sigma: np.ndarray
    blocks: tuple = ((0, 1, 2), (3, 4, 5), (6, 7, 8))
    factor: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("sigma must be square")
        if not np.allclose(s, s.T, rtol=0, atol=1e-12 * max(1.0, np.abs(s).max())):
            raise ValueError("sigma must be symmetric")
        ev = np.linalg.eigvalsh(s)
        if ev.min() < -1e-9 * max(ev.max(), 0.0):
            raise ValueError(f"sigma is not positive semi-definite (min eigenvalue {ev.min():.3g})")
        object.__setattr__(self, "sigma", s)

    @classmethod
    def identity(cls, d: int = 9) -> "CovarianceSpec":
        return cls(np.eye(d), blocks=tuple((i,) for i in range(d)))


@dataclass(eq=False)
class SampleSet:
    absorbance: np.ndarray
    labels: np.ndarray
    concentrations: np.ndarray
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.absorbance.shape[0]
        if self.labels.shape[0] != n or self.concentrations.shape[0] != n:
            raise ValueError("absorbance, labels and concentrations must have the same row count")

    @property
    def n_samples(self) -> int:
        return int(self.absorbance.shape[0])

    def subset(self, idx) -> "SampleSet":
        return SampleSet(self.absorbance[idx], self.labels[idx], self.concentrations[idx], dict(self.manifest))


def sample_concentrations_independent(seed: int, n: int, n_gases: int = 9) -> np.ndarray:
    if n < 1 or n_gases < 1:
        raise ValueError(f"need n >= 1 and n_gases >= 1, got n={n}, n_gases={n_gases}")
    return substream(seed, "concentrations").uniform(0.0, MAX_CONC_UM, size=(n, n_gases))


def build_block_covariance(seed: int) -> CovarianceSpec:
    """Random 9x9 block covariance with strongly coupled diagonal blocks.

    ``L`` is made of 3x3 blocks of U(0, 1) entries with the diagonal blocks
    multiplied by 100; the covariance is ``L @ L.T``.
    """
    rng = substream(seed, "covariance")
    factor = rng.uniform(0.0, 1.0, size=(9, 9))
    for b in range(3):
        factor[3 * b:3 * b + 3, 3 * b:3 * b + 3] *= 100.0
    sigma = factor @ factor.T
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceSpec(sigma, factor=factor)


def sample_mvn(seed: int, spec: CovarianceSpec, n: int) -> np.ndarray:
    """Zero-mean multivariate normal draws with covariance ``spec.sigma``.

    Uses the symmetric square root from an eigendecomposition, which also
    covers singular (semi-definite) covariances.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    evals, evecs = np.linalg.eigh(spec.sigma)
    tol = 1e-9 * max(evals.max(), 0.0)
    if evals.min() < -tol:
        raise np.linalg.LinAlgError(
            f"covariance is indefinite (min eigenvalue {evals.min():.3g}); cannot factorize"
        )
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    z = substream(seed, "mvn").standard_normal((n, spec.sigma.shape[0]))
    return z @ root


def ecdf_transform(x: np.ndarray) -> np.ndarray:
    """Map each column to its in-sample empirical CDF, ``mean(x_j < x)``.

    Distinct values map to a permutation of ``{0, 1/n, ..., (n-1)/n}``;
    tied values share the value of their group.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("ecdf_transform needs an (n, d) array with n >= 2")
    n = x.shape[0]
    # 'min' rank minus one counts strictly smaller entries
    return (rankdata(x, method="min", axis=0) - 1.0) / n


def sample_concentrations_correlated(seed: int, n: int) -> np.ndarray:
    if n < 2:
        raise ValueError(f"correlated sampling needs n >= 2, got {n}")
    spec = build_block_covariance(seed)
    return MAX_CONC_UM * ecdf_transform(sample_mvn(seed, spec, n))


def apply_presence_mask(c: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero each (sample, gas) entry independently with probability 0.5."""
    c = np.asarray(c, dtype=float)
    keep = substream(seed, "masking").random(c.shape) < 0.5
    masked = np.where(keep, c, 0.0)
    labels = (masked > 0).astype(np.int8)
    return masked, labels


def noise_sigma(snr_db: float, i0: float = 1.0) -> float:
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return i0 * 10.0 ** (-snr_db / 20.0)


def _noisy_chunk(clean: np.ndarray, sigma: float, seed: int, chunk: int) -> np.ndarray:
    eta = substream(seed, "noise", chunk).standard_normal(clean.shape)
    intensity = 10.0 ** (-clean) + sigma * eta
    return -np.log10(np.maximum(intensity, INTENSITY_FLOOR))


def synthesize_spectra(
    lib: GasLibrary,
    c: np.ndarray,
    labels: np.ndarray,
    path_cm: float = DEFAULT_PATH_CM,
    snr_db: float = math.inf,
    seed: int = 0,
    workers: int = 1,
) -> SampleSet:
    """Beer-Lambert absorbance spectra with intensity noise.

    Clean absorbance is ``c @ eps * path_cm``. For finite ``snr_db`` the
    transmitted intensity ``10**-A`` (unit source) gets additive Gaussian
    noise with standard deviation ``10**(-snr_db/20)``, is floored at 1e-6
    and converted back to absorbance. At infinite SNR the clean absorbance
    is returned unchanged.

    Noise is drawn in fixed blocks of rows, each from its own substream, so
    the output does not depend on ``workers``.
    """
    c = np.asarray(c, dtype=float)
    labels = np.asarray(labels)
    if c.ndim != 2 or c.shape[1] != lib.n_gases:
        raise ValueError(f"concentration matrix has shape {c.shape}, expected (n, {lib.n_gases})")
    if labels.shape != c.shape:
        raise ValueError(f"labels shape {labels.shape} does not match concentrations {c.shape}")
    if not path_cm > 0:
        raise ValueError(f"path length must be positive, got {path_cm}")
    clean = (c * path_cm) @ lib.absorptivity
    sigma = noise_sigma(snr_db)
    if sigma == 0.0:
        absorbance = clean
    else:
        starts = range(0, clean.shape[0], NOISE_CHUNK_ROWS)
        jobs = [(clean[s:s + NOISE_CHUNK_ROWS], sigma, seed, k) for k, s in enumerate(starts)]
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(lambda j: _noisy_chunk(*j), jobs))
        else:
            parts = [_noisy_chunk(*j) for j in jobs]
        absorbance = np.vstack(parts) if parts else clean
    return SampleSet(absorbance, labels.astype(np.int8), c)


# --- manifests -------------------------------------------------------------

def fixture_library_ref(seed: int = 7, n_gases: int = 9, start: float = 1.0,
                        stop: float = 7.0, count: int = 1000) -> dict:
    return {"kind": "fixture", "seed": seed, "n_gases": n_gases,
            "grid": {"start": start, "stop": stop, "count": count}}


def resolve_library(ref: dict) -> GasLibrary:
    kind = ref.get("kind")
    if kind == "fixture":
        g = ref["grid"]
        lib = generate_fixture_library(ref["seed"], ref["n_gases"],
                                       WavelengthGrid.uniform(g["start"], g["stop"], g["count"]))
    elif kind == "csv":
        lib = load_library(ref["path"])
    else:
        raise ValueError(f"unknown library kind {kind!r}")
    expected = ref.get("sha256")
    if expected is not None and library_hash(lib) != expected:
        raise ValueError("library content does not match the hash recorded in the manifest")
    return lib


def make_manifest(lib_ref: dict, lib: GasLibrary, n: int, seed: int, snr_db: float,
                  mode: str = "independent", path_cm: float = DEFAULT_PATH_CM) -> dict:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return {
        "format_version": FORMAT_VERSION,
        "seed": int(seed),
        "snr_db": None if math.isinf(snr_db) else float(snr_db),
        "mode": mode,
        "path_cm": float(path_cm),
        "n_samples": int(n),
        "n_gases": lib.n_gases,
        "n_pixels": lib.grid.count,
        "gas_names": list(lib.names),
        "library": {**lib_ref, "sha256": library_hash(lib)},
    }


def generate_dataset(manifest: dict, lib: GasLibrary | None = None, workers: int = 1) -> SampleSet:
    """Build the sample set a manifest describes.

    The manifest is the complete recipe: calling this twice with the same
    manifest gives bit-identical arrays.
    """
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported manifest format_version {manifest.get('format_version')!r}")
    if lib is None:
        lib = resolve_library(manifest["library"])
    elif library_hash(lib) != manifest["library"]["sha256"]:
        raise ValueError("library does not match manifest")
    seed, n = manifest["seed"], manifest["n_samples"]
    if manifest["mode"] == "independent":
        c = sample_concentrations_independent(seed, n, lib.n_gases)
    elif manifest["mode"] == "correlated":
        if lib.n_gases != 9:
            raise ValueError("correlated mode needs exactly 9 gases")
        c = sample_concentrations_correlated(seed, n)
    else:
        raise ValueError(f"unknown mode {manifest['mode']!r}")
    c, labels = apply_presence_mask(c, seed)
    snr = manifest["snr_db"]
    ss = synthesize_spectra(lib, c, labels, manifest["path_cm"],
                            math.inf if snr is None else snr, seed, workers)
    ss.manifest = dict(manifest)
    return ss


def dataset_protocol(lib_ref: dict, lib: GasLibrary, n: int, seed: int,
                     snrs=(0, 10, 20, 30, 40, 50), modes=MODES,
                     path_cm: float = DEFAULT_PATH_CM) -> list[dict]:
    """Manifests for every (SNR, correlation mode) combination."""
    return [make_manifest(lib_ref, lib, n, seed, s, m, path_cm) for m in modes for s in snrs]


def save_dataset(ss: SampleSet, directory) -> Path:
    """Write ``data.csv`` and ``manifest.json`` into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = ss.manifest.get("gas_names") or [f"gas{i}" for i in range(ss.labels.shape[1])]
    header = (["sample_id"] + [f"c_{g}" for g in names] + [f"y_{g}" for g in names]
              + [f"a_{j}" for j in range(ss.absorbance.shape[1])])
    ids = np.arange(ss.n_samples)[:, None].astype(float)
    table = np.hstack([ids, ss.concentrations, ss.labels, ss.absorbance])
    n_g = ss.labels.shape[1]
    fmt = ["%d"] + ["%r"] * n_g + ["%d"] * n_g + ["%r"] * ss.absorbance.shape[1]
    with (d / "data.csv").open("w") as fh:
        fh.write(",".join(header) + "\n")
        line = ",".join(fmt) + "\n"
        for row in table:
            fh.write(line % tuple(row.tolist()))
    manifest = dict(ss.manifest)
    manifest.setdefault("format_version", FORMAT_VERSION)
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return d


def load_dataset(directory) -> SampleSet:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported dataset format_version {manifest.get('format_version')!r}")
    table = np.loadtxt(d / "data.csv", delimiter=",", skiprows=1, ndmin=2)
    n_g = manifest["n_gases"]
    c = table[:, 1:1 + n_g]
    y = table[:, 1 + n_g:1 + 2 * n_g].astype(np.int8)
    a = table[:, 1 + 2 * n_g:]
    return SampleSet(a, y, c, manifest)
