"""Line spectral signal model: spectra, sampling, noise, and support matching.

A line spectrum is a finite set of normalized frequencies in [0, 1) with
complex amplitudes.  Sampling it at integer times t = -n..n gives a vector of
2n+1 complex observations; estimation quality is judged by optimally matching
an estimated spectrum against the truth under the wrap-around metric.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "LineSpectrum",
    "SampleVector",
    "NoiseSpec",
    "SupportMatch",
    "wrap_distance",
    "atoms",
    "synthesize",
    "add_noise",
    "match_supports",
]


def wrap_distance(a, b):
    """Wrap-around distance on the unit circle; result in [0, 0.5].

    Example: wrap_distance(0.1, 0.9) == 0.2.
    """
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    out = np.minimum(d, 1.0 - d)
    return float(out) if np.ndim(out) == 0 else out


def _min_separation(freqs: np.ndarray) -> float:
    if freqs.size < 2:
        return math.inf
    d = wrap_distance(freqs[:, None], freqs[None, :])
    iu = np.triu_indices(freqs.size, k=1)
    return float(d[iu].min())


@dataclass(frozen=True)
class LineSpectrum:
    """Frequencies in [0, 1) with nonzero complex amplitudes.

    Frequencies are stored canonically modulo 1; all comparisons use
    wrap_distance.
    """

    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        freqs = np.atleast_1d(np.asarray(self.freqs, dtype=float)) % 1.0
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if freqs.size == 0:
            raise ValueError("a line spectrum needs at least one component")
        if freqs.shape != coeffs.shape:
            raise ValueError("freqs and coeffs must have equal length")
        if np.any(np.abs(coeffs) == 0.0):
            raise ValueError("amplitudes must be nonzero")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coeffs", coeffs)
        if _min_separation(freqs) == 0.0:
            raise ValueError("frequencies must be pairwise distinct modulo 1")

    @property
    def k(self) -> int:
        return self.freqs.size

    @property
    def separation(self) -> float:
        """Minimum pairwise wrap-around distance (inf for a single tone)."""
        return _min_separation(self.freqs)

    @property
    def c_min(self) -> float:
        return float(np.abs(self.coeffs).min())

    @property
    def c_max(self) -> float:
        return float(np.abs(self.coeffs).max())

    @property
    def dynamic_range(self) -> float:
        return self.c_max / self.c_min

    def to_json(self, n: int | None = None) -> str:
        obj = {"freqs": self.freqs.tolist(),
               "coeffs": [[c.real, c.imag] for c in self.coeffs]}
        if n is not None:
            obj = {"n": n, **obj}
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "LineSpectrum":
        obj = json.loads(text)
        coeffs = np.array([complex(re, im) for re, im in obj["coeffs"]])
        return cls(np.asarray(obj["freqs"], dtype=float), coeffs)


@dataclass(frozen=True)
class SampleVector:
    """2n+1 complex samples indexed by t = -n..n, n even."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if self.n < 2 or self.n % 2:
            raise ValueError("n must be a positive even integer")
        if values.size != 2 * self.n + 1:
            raise ValueError("values must have length 2n+1")
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return np.arange(-self.n, self.n + 1)

    def to_json(self) -> str:
        return json.dumps({"n": self.n,
                           "values": [[v.real, v.imag] for v in self.values]})

    @classmethod
    def from_json(cls, text: str) -> "SampleVector":
        obj = json.loads(text)
        vals = np.array([complex(re, im) for re, im in obj["values"]])
        return cls(int(obj["n"]), vals)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", "re", "im"])
        for t, v in zip(self.times, self.values):
            w.writerow([int(t), repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampleVector":
        rows = list(csv.reader(io.StringIO(text)))
        body = rows[1:] if rows and rows[0][:1] == ["t"] else rows
        ts = np.array([int(r[0]) for r in body])
        vals = np.array([complex(float(r[1]), float(r[2])) for r in body])
        order = np.argsort(ts)
        return cls(int(ts.max()), vals[order])


@dataclass(frozen=True)
class NoiseSpec:
    """Circularly-symmetric complex Gaussian noise, E|w_t|^2 = sigma^2."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def gamma0(self, n: int) -> float:
        """Normalized noise level sigma * sqrt(log(n)/n)."""
        return self.sigma * math.sqrt(math.log(n) / n)


def atoms(freqs, n: int) -> np.ndarray:
    """Matrix of sampled complex exponentials, shape (2n+1, k)."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    t = np.arange(-n, n + 1)
    return np.exp(1j * 2 * np.pi * np.outer(t, freqs))


def synthesize(spectrum: LineSpectrum, n: int) -> SampleVector:
    """Sample sum_l c_l exp(i 2 pi f_l t) at t = -n..n (n even)."""
    if n < 2 or n % 2:
        raise ValueError("n must be a positive even integer")
    return SampleVector(n, atoms(spectrum.freqs, n) @ spectrum.coeffs)


def add_noise(x: SampleVector, noise: NoiseSpec) -> SampleVector:
    """Add i.i.d. complex Gaussian noise; deterministic given noise.seed.

    Real and imaginary parts are independent N(0, sigma^2/2), so each entry
    has E|w_t|^2 = sigma^2.  Uses the Philox counter-based generator so draws
    are reproducible regardless of threading.
    """
    if noise.sigma == 0.0:
        return x
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(noise.seed)))
    m = x.values.size
    w = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * (noise.sigma / math.sqrt(2.0))
    return SampleVector(x.n, x.values + w)


@dataclass(frozen=True)
class SupportMatch:
    """Optimal pairing of an estimated spectrum against the truth."""

    assignment: tuple        # assignment[i] = index into estimate for truth i
    freq_errors: np.ndarray  # per-pair wrap distances
    coeff_errors: np.ndarray
    weighted_freq_error: float   # max_l |c*_l| |fhat_l - f*_l|
    max_freq_error: float        # max_l |fhat_l - f*_l| (unweighted)
    max_coeff_error: float
    order_mismatch: bool = False
    unmatched_truth: tuple = ()
    unmatched_estimate: tuple = ()


def match_supports(truth: LineSpectrum, estimate: LineSpectrum) -> SupportMatch:
    """Minimum-total-wrap-distance bijection between supports.

    With equal model orders this is the optimal assignment; with unequal
    orders the smaller support is matched into the larger one and the
    leftovers are reported with order_mismatch set.
    """
    cost = wrap_distance(truth.freqs[:, None], estimate.freqs[None, :])
    rows, cols = linear_sum_assignment(cost)
    mismatch = truth.k != estimate.k
    ferr = wrap_distance(truth.freqs[rows], estimate.freqs[cols])
    cerr = np.abs(truth.coeffs[rows] - estimate.coeffs[cols])
    weighted = float(np.max(np.abs(truth.coeffs[rows]) * ferr))
    assignment = tuple(int(c) for c in cols)
    unmatched_t = tuple(sorted(set(range(truth.k)) - set(rows.tolist())))
    unmatched_e = tuple(sorted(set(range(estimate.k)) - set(cols.tolist())))
    return SupportMatch(
        assignment=assignment,
        freq_errors=ferr,
        coeff_errors=cerr,
        weighted_freq_error=weighted,
        max_freq_error=float(ferr.max()),
        max_coeff_error=float(cerr.max()),
        order_mismatch=mismatch,
        unmatched_truth=unmatched_t,
        unmatched_estimate=unmatched_e,
    )
