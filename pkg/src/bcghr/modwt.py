"""Maximal overlap discrete wavelet transform and its multiresolution analysis.

Filters follow the convolution convention: level-j coefficients are
``W[j, t] = sum_l h~[j, l] * X[(t - l) mod N]``. Analysis runs the pyramid
algorithm (each level filters the previous scaling coefficients with taps
upsampled by ``2**(j-1)``); synthesis runs it backwards with the dual filters,
which for orthogonal wavelets are the analysis filters themselves.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from .signal_core import TimeSeries

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class WaveletFilterPair:
    """DWT-normalised decomposition filters plus the matching synthesis pair.

    ``h``/``g`` are the wavelet (high-pass) and scaling (low-pass) analysis
    taps; ``h_rec``/``g_rec`` the reconstruction taps. All four share one
    length so the synthesis delay is the same on both branches.
    """

    name: str
    h: np.ndarray
    g: np.ndarray
    h_rec: np.ndarray
    g_rec: np.ndarray

    def __post_init__(self):
        for attr in ("h", "g", "h_rec", "g_rec"):
            arr = np.array(getattr(self, attr), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        if len({self.h.size, self.g.size, self.h_rec.size, self.g_rec.size}) != 1:
            raise ValueError("all filters of a pair must have the same length")
        if abs(self.g.sum() - SQRT2) > 1e-10 or abs(self.h.sum()) > 1e-10:
            raise ValueError(f"{self.name}: filters are not DWT-normalised")

    @property
    def length(self) -> int:
        return self.g.size

    @property
    def orthogonal(self) -> bool:
        return bool(np.allclose(self.g_rec, self.g[::-1]) and np.allclose(self.h_rec, self.h[::-1]))


def _qmf_pair(name, dec_lo, rec_lo) -> WaveletFilterPair:
    dec_lo = np.asarray(dec_lo, float)
    rec_lo = np.asarray(rec_lo, float)
    n = np.arange(dec_lo.size)
    dec_hi = (-1.0) ** (n + 1) * rec_lo[::-1]
    rec_hi = (-1.0) ** n * dec_lo[::-1]
    return WaveletFilterPair(name, dec_hi, dec_lo, rec_hi, rec_lo)


def haar_filters() -> WaveletFilterPair:
    g = np.array([1.0, 1.0]) / SQRT2
    return _qmf_pair("haar", g, g[::-1])


# Spline biorthogonal 3.9: synthesis low-pass is the cubic B-spline mask,
# analysis low-pass is its dual of length 20.
_BIOR39_DEC_LO = np.array([
    -0.000679744372783699, 0.002039233118351097, 0.005060319219611981,
    -0.020618912641105536, -0.014112787930175846, 0.09913478249423216,
    0.012300136269419315, -0.32019196836077857, 0.0020500227115698858,
    0.9421257006782068, 0.9421257006782068, 0.0020500227115698858,
    -0.32019196836077857, 0.012300136269419315, 0.09913478249423216,
    -0.014112787930175846, -0.020618912641105536, 0.005060319219611981,
    0.002039233118351097, -0.000679744372783699,
])
_BIOR39_REC_LO = np.zeros(20)
_BIOR39_REC_LO[8:12] = np.array([1.0, 3.0, 3.0, 1.0]) * SQRT2 / 8


def bior39_filters() -> WaveletFilterPair:
    return _qmf_pair("bior3.9", _BIOR39_DEC_LO, _BIOR39_REC_LO)


def spline_dual_lowpass(nr: int = 3, nd: int = 9) -> np.ndarray:
    """Dual low-pass of the biorthogonal spline family, built from its trigonometric form.

    Used to cross-check the embedded bior3.9 constants.
    """
    k_total = (nr + nd) // 2
    sin2 = np.array([-0.25, 0.5, -0.25])
    poly = np.zeros(1)
    for k in range(k_total):
        term = np.array([float(comb(k_total - 1 + k, k))])
        for _ in range(k):
            term = np.convolve(term, sin2)
        width = max(poly.size, term.size)
        poly = np.pad(poly, (width - poly.size) // 2) + np.pad(term, (width - term.size) // 2)
    out = poly
    for _ in range(nd):
        out = np.convolve(out, [0.5, 0.5])
    return out * SQRT2


WAVELETS = {"bior3.9": bior39_filters, "haar": haar_filters}


@dataclass(frozen=True)
class ModwtCoefficients:
    W: list[np.ndarray]
    V: np.ndarray
    filters: WaveletFilterPair

    @property
    def J(self) -> int:
        return len(self.W)


@dataclass(frozen=True)
class MraDecomposition:
    D: list[np.ndarray]
    S: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return np.sum(self.D, axis=0) + self.S


def _extend(x: np.ndarray, span: int, before: bool) -> np.ndarray:
    """``x`` with ``span`` samples of circular wrap-around on one side."""
    n = x.size
    if span <= n:
        wrap = x[n - span:] if before else x[:span]
    else:
        reps = -(-span // n)
        wrap = np.tile(x, reps)[-span:] if before else np.tile(x, reps)[:span]
    return np.concatenate([wrap, x] if before else [x, wrap])


def _shift_add(ext: np.ndarray, taps: np.ndarray, offsets: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    for c, o in zip(taps, offsets):
        if c != 0.0:
            out += c * ext[o:o + n]
    return out


# below this many nonzero taps, shift-and-add beats a dense convolution with
# the zero-stuffed filter (bior3.9 has 4 nonzero taps in h and g_rec)
_SPARSE_TAPS = 8


def _circular_filter(x: np.ndarray, taps: np.ndarray, step: int) -> np.ndarray:
    """``y[t] = sum_l taps[l] * x[(t - l*step) mod N]``."""
    n = x.size
    span = (taps.size - 1) * step
    ext = _extend(x, span, before=True)
    if np.count_nonzero(taps) <= _SPARSE_TAPS:
        return _shift_add(ext, taps, span - np.arange(taps.size) * step, n)
    up = np.zeros(span + 1)
    up[::step] = taps
    return np.convolve(ext, up, mode="valid")


def _circular_filter_adjoint(x: np.ndarray, taps: np.ndarray, step: int) -> np.ndarray:
    """``y[t] = sum_l taps[l] * x[(t + l*step) mod N]``."""
    n = x.size
    span = (taps.size - 1) * step
    ext = _extend(x, span, before=False)
    if np.count_nonzero(taps) <= _SPARSE_TAPS:
        return _shift_add(ext, taps, np.arange(taps.size) * step, n)
    up = np.zeros(span + 1)
    up[::step] = taps
    return np.correlate(ext, up, mode="valid")


def _as_array(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.samples
    return np.asarray(series, dtype=float)


def modwt(series, filters: WaveletFilterPair | None = None, J: int = 4) -> ModwtCoefficients:
    """Level-``J`` MODWT of ``series`` with circular boundary handling.

    Parameters
    ----------
    series : TimeSeries or array_like
    filters : WaveletFilterPair, optional
        Defaults to bior3.9.
    J : int
        Number of levels.
    """
    if J < 1:
        raise ValueError(f"invalid level J={J}")
    filters = filters or bior39_filters()
    x = _as_array(series)
    if 2 ** J > x.size:
        warnings.warn(f"2**J = {2 ** J} exceeds series length {x.size}", stacklevel=2)
    h = filters.h / SQRT2
    g = filters.g / SQRT2
    W = []
    v = x
    for j in range(1, J + 1):
        step = 2 ** (j - 1)
        W.append(_circular_filter(v, h, step))
        v = _circular_filter(v, g, step)
    return ModwtCoefficients(W, v, filters)


def _synthesis_taps(filters: WaveletFilterPair):
    # Reversing the reconstruction taps turns their (L-1)-sample delay into the
    # t + l indexing of the adjoint form; for orthogonal filters this gives
    # back the analysis taps.
    return filters.h_rec[::-1] / SQRT2, filters.g_rec[::-1] / SQRT2


def _inverse_step(w, v, hs, gs, j):
    step = 2 ** (j - 1)
    out = _circular_filter_adjoint(v, gs, step)
    if w is not None:
        out = out + _circular_filter_adjoint(w, hs, step)
    return out


def smooth(coeffs: ModwtCoefficients) -> np.ndarray:
    """Only the level-J smooth S_J of the MRA."""
    return _synthesize_smooth(coeffs.V, coeffs.filters, coeffs.J)


def _synthesize_smooth(v: np.ndarray, filters: WaveletFilterPair, J: int) -> np.ndarray:
    _, gs = _synthesis_taps(filters)
    for j in range(J, 0, -1):
        v = _inverse_step(None, v, None, gs, j)
    return v


def modwt_smooth(series, filters: WaveletFilterPair | None = None, J: int = 4) -> np.ndarray:
    """S_J straight from the scaling-filter pyramid, skipping the wavelet
    coefficients it does not depend on. Equals ``modwt_mra(modwt(...)).S``."""
    if J < 1:
        raise ValueError(f"invalid level J={J}")
    filters = filters or bior39_filters()
    v = _as_array(series)
    g = filters.g / SQRT2
    for j in range(1, J + 1):
        v = _circular_filter(v, g, 2 ** (j - 1))
    return _synthesize_smooth(v, filters, J)


def modwt_mra(coeffs: ModwtCoefficients) -> MraDecomposition:
    """Details D_1..D_J and smooth S_J; they sum back to the input."""
    hs, gs = _synthesis_taps(coeffs.filters)
    details = []
    for k in range(1, coeffs.J + 1):
        d = _circular_filter_adjoint(coeffs.W[k - 1], hs, 2 ** (k - 1))
        for j in range(k - 1, 0, -1):
            d = _inverse_step(None, d, None, gs, j)
        details.append(d)
    return MraDecomposition(details, smooth(coeffs))


def imodwt(coeffs: ModwtCoefficients) -> np.ndarray:
    hs, gs = _synthesis_taps(coeffs.filters)
    v = coeffs.V
    for j in range(coeffs.J, 0, -1):
        v = _inverse_step(coeffs.W[j - 1], v, hs, gs, j)
    return v
