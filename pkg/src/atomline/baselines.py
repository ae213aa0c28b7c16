"""Reference estimators and bounds: CRB, single-snapshot MUSIC, refined MLE."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .signal_model import LineSpectrum, SampleVector, atoms, wrap_distance

__all__ = [
    "CrbResult",
    "crb",
    "music",
    "mle_refine",
    "estimate_model_order",
]


@dataclass(frozen=True)
class CrbResult:
    """Frequency-block Cramer-Rao variances for the deterministic model."""

    per_frequency_variance: np.ndarray
    fisher_condition: float


def crb(truth: LineSpectrum, n: int, sigma: float) -> CrbResult:
    """CRB on frequency estimates from 2n+1 samples in complex Gaussian noise.

    Builds the 3k x 3k Fisher information for parameters (f, u, v) of
    x(t) = sum c_l exp(i 2 pi f_l t) with per-sample noise variance sigma^2,
    inverts it, and returns the frequency-block diagonal.  For a single unit
    amplitude this reduces to sigma^2 / (8 pi^2 sum_t t^2).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    t = np.arange(-n, n + 1).astype(float)
    A = atoms(truth.freqs, n)
    J = np.hstack([1j * 2 * np.pi * t[:, None] * A * truth.coeffs, A, 1j * A])
    fim = (2.0 / sigma**2) * np.real(J.conj().T @ J)
    cond = float(np.linalg.cond(fim))
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError(
            "Fisher information is singular (coalescing frequencies)")
    cov = np.linalg.inv(fim)
    return CrbResult(np.diag(cov)[:truth.k].copy(), cond)


def _smoothed_covariance(y: SampleVector, m: int) -> np.ndarray:
    """Forward-backward spatially smoothed covariance from one snapshot."""
    v = y.values
    L = v.size - m + 1
    windows = np.lib.stride_tricks.sliding_window_view(v, m)  # (L, m)
    R = windows.T @ windows.conj() / L
    J = np.eye(m)[::-1]
    return 0.5 * (R + J @ R.conj() @ J)


def music(y: SampleVector, k: int, subarray: int | None = None,
          grid: int | None = None) -> LineSpectrum:
    """Single-snapshot MUSIC via Hankel windows with forward-backward smoothing.

    The smoothed covariance of length-subarray windows is eigendecomposed;
    frequencies are the k largest peaks of 1/||E_noise^H a(f)||^2 on a dense
    grid, refined by bounded scalar minimization of the projection onto the
    noise subspace.  Amplitudes follow by least squares on the full samples.
    """
    m = (2 * y.n + 1) // 2 if subarray is None else subarray
    if not k < m <= y.n + 1:
        raise ValueError("need k < subarray <= n+1")
    R = _smoothed_covariance(y, m)
    vals, vecs = np.linalg.eigh(R)
    noise_space = vecs[:, :m - k]  # eigh sorts ascending

    G = 16 * y.n if grid is None else grid
    # ||E^H a(f)||^2 on the grid: |fft(col)[g]| = |col^H a(g/G)|
    spec = np.zeros(G)
    for col in noise_space.T:
        arr = np.zeros(G, dtype=complex)
        arr[:m] = col
        spec += np.abs(np.fft.fft(arr)) ** 2

    def proj(f: float) -> float:
        a = np.exp(1j * 2 * np.pi * f * np.arange(m))
        return float(np.sum(np.abs(noise_space.conj().T @ a) ** 2))

    from scipy.optimize import minimize_scalar

    is_min = (spec <= np.roll(spec, 1)) & (spec <= np.roll(spec, -1))
    order = np.argsort(spec[is_min])
    candidates = np.flatnonzero(is_min)[order]
    freqs = []
    for idx in candidates:
        f0 = idx / G
        if any(wrap_distance(f0, f) < 0.5 / y.n for f in freqs):
            continue
        res = minimize_scalar(proj, bounds=(f0 - 1.0 / G, f0 + 1.0 / G),
                              method="bounded", options={"xatol": 1e-14})
        freqs.append(float(res.x % 1.0))
        if len(freqs) == k:
            break
    # pure-noise inputs can lack k clean minima; fall back to best grid points
    i = 0
    flat = np.argsort(spec)
    while len(freqs) < k and i < G:
        f0 = flat[i] / G
        if all(wrap_distance(f0, f) >= 0.5 / y.n for f in freqs):
            freqs.append(float(f0))
        i += 1
    freqs = np.asarray(freqs)
    A = atoms(freqs, y.n)
    coeffs, *_ = np.linalg.lstsq(A, y.values, rcond=None)
    coeffs = np.where(coeffs == 0, 1e-300, coeffs)  # LineSpectrum needs nonzero
    return LineSpectrum(freqs, coeffs)


def mle_refine(y: SampleVector, init: LineSpectrum, max_iters: int = 200,
               grad_tol: float = 1e-12) -> LineSpectrum:
    """Refine frequencies by variable projection on ||A(f) c - y||_2^2.

    Amplitudes are eliminated by least squares at every candidate frequency
    vector; frequencies move by Gauss-Newton steps with backtracking, so the
    objective never increases between accepted iterates.
    """
    f = init.freqs.copy()
    t = np.arange(-y.n, y.n + 1).astype(float)

    def project(freqs):
        A = atoms(freqs, y.n)
        c, *_ = np.linalg.lstsq(A, y.values, rcond=None)
        r = A @ c - y.values
        return A, c, r, float(np.real(np.conj(r) @ r))

    A, c, r, obj = project(f)
    for _ in range(max_iters):
        # Kaufman-style Jacobian of the projected residual
        Ap = 1j * 2 * np.pi * t[:, None] * A
        Q, _ = np.linalg.qr(A)
        J = Ap * c
        J = J - Q @ (Q.conj().T @ J)
        g = np.real(J.conj().T @ r)
        if np.linalg.norm(g, ord=np.inf) <= grad_tol * (1.0 + obj):
            break
        H = np.real(J.conj().T @ J)
        try:
            step = np.linalg.solve(H + 1e-12 * np.trace(H) * np.eye(f.size), -g)
        except np.linalg.LinAlgError:
            warnings.warn("normal equations became singular; returning best "
                          "iterate", stacklevel=2)
            break
        alpha = 1.0
        accepted = False
        for _ in range(40):
            trial = (f + alpha * step) % 1.0
            A2, c2, r2, obj2 = project(trial)
            if obj2 < obj:
                f, A, c, r, obj = trial, A2, c2, r2, obj2
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
    c = np.where(c == 0, 1e-300, c)
    return LineSpectrum(f, c)


def estimate_model_order(y: SampleVector, subarray: int | None = None,
                         max_order: int | None = None) -> int:
    """MDL order estimate from the smoothed-covariance eigenvalue profile."""
    m = (2 * y.n + 1) // 2 if subarray is None else subarray
    R = _smoothed_covariance(y, m)
    ev = np.linalg.eigvalsh(R)[::-1]
    ev = np.maximum(ev, 1e-300)
    L = y.values.size - m + 1
    kmax = m - 1 if max_order is None else min(max_order, m - 1)
    best_k, best_score = 0, math.inf
    for k in range(kmax + 1):
        tail = ev[k:]
        geo = float(np.mean(np.log(tail)))
        arith = float(np.mean(tail))
        score = -L * (m - k) * (geo - math.log(arith)) \
            + 0.5 * k * (2 * m - k) * math.log(L)
        if score < best_score:
            best_k, best_score = k, score
    return best_k
