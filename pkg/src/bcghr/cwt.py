"""Continuous wavelet transform on an integer scale grid.

Three wavelet families are supported:

* ``gausP``      P-th derivative of ``exp(-t**2)``, unit energy (real)
* ``fbspM-B-C``  frequency B-spline ``sqrt(B) * sinc(B t / M)**M * exp(2j pi C t)``
* ``shanB-C``    Shannon ``sqrt(B) * sinc(B t) * exp(2j pi C t)``

``sinc`` is the normalised ``sin(pi x) / (pi x)``. The coefficient at scale
``a`` and shift ``tau`` is ``a**-0.5 * sum_t x[t] * conj(psi((t - tau) / a))``
with the signal zero-extended past its ends.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite
from scipy import fft as sp_fft

from .signal_core import TimeSeries

# Scale-dependent normalisation exponent: C(a, tau) carries a ** -NORM_EXPONENT.
NORM_EXPONENT = 0.5
TAIL_REL = 1e-6

_SPEC_RE = re.compile(
    r"^(?:(?P<gaus>gaus)(?P<p>\d+)"
    r"|(?P<fbsp>fbsp)(?P<m>\d+)-(?P<fb>[\d.]+)-(?P<fc>[\d.]+)"
    r"|(?P<shan>shan)(?P<sb>[\d.]+)-(?P<sc>[\d.]+))$",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class CwtWaveletSpec:
    family: str  # "gaus" | "fbsp" | "shan"
    order: int = 2  # P for gaus, M for fbsp
    bandwidth: float = 1.0
    center: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaus", "fbsp", "shan"):
            raise ValueError(f"bad wavelet spec: unknown family {self.family!r}")
        if self.order < 1 or self.bandwidth <= 0 or self.center <= 0:
            raise ValueError(f"bad wavelet spec: {self}")

    @classmethod
    def parse(cls, name: str) -> "CwtWaveletSpec":
        """Parse names like ``gaus2``, ``fbsp2-1-1`` or ``shan1.5-1.0``."""
        m = _SPEC_RE.match(name.strip())
        if not m:
            raise ValueError(f"bad wavelet spec: {name!r}")
        if m["gaus"]:
            return cls("gaus", order=int(m["p"]))
        if m["fbsp"]:
            return cls("fbsp", order=int(m["m"]), bandwidth=float(m["fb"]), center=float(m["fc"]))
        return cls("shan", bandwidth=float(m["sb"]), center=float(m["sc"]))

    @property
    def complex(self) -> bool:
        return self.family != "gaus"

    @property
    def name(self) -> str:
        if self.family == "gaus":
            return f"gaus{self.order}"
        if self.family == "fbsp":
            return f"fbsp{self.order}-{self.bandwidth:g}-{self.center:g}"
        return f"shan{self.bandwidth:g}-{self.center:g}"

    def tail_support(self) -> float:
        """Half-width (in units of the mother wavelet) beyond which |psi| < 1e-6 of its peak."""
        if self.family == "gaus":
            return _gaus_support(self.order)
        if self.family == "shan":
            return 1.0 / (np.pi * self.bandwidth * TAIL_REL)
        m = self.order
        return m / (np.pi * self.bandwidth) * TAIL_REL ** (-1.0 / m)


GAUS2 = CwtWaveletSpec("gaus", order=2)
FBSP_2_1_1 = CwtWaveletSpec("fbsp", order=2, bandwidth=1.0, center=1.0)
SHAN_15_10 = CwtWaveletSpec("shan", bandwidth=1.5, center=1.0)


def _gaus_poly(p: int) -> np.ndarray:
    """Hermite-series coefficients c with d^p/dt^p exp(-t^2) = (-1)^p H_p(t) exp(-t^2)."""
    c = np.zeros(p + 1)
    c[p] = (-1.0) ** p
    return c


@lru_cache(maxsize=None)
def _gaus_norm(p: int) -> float:
    # sign makes even orders peak positively at t = 0; scale gives unit L2 energy
    # energy = int H_p(t)^2 exp(-2t^2) dt, exact with Gauss-Hermite after u = sqrt(2) t
    u, w = hermite.hermgauss(p + 2)
    energy = np.sum(w * hermite.hermval(u / np.sqrt(2), _gaus_poly(p)) ** 2) / np.sqrt(2)
    return (-1.0) ** (p // 2) / np.sqrt(energy)


def _gaus_derivative(p: int, t: np.ndarray) -> np.ndarray:
    """d^p/dt^p exp(-t^2) for p >= 0."""
    return hermite.hermval(t, _gaus_poly(p)) * np.exp(-t * t)


@lru_cache(maxsize=None)
def _gaus_support(p: int) -> float:
    # the antiderivative must vanish too, or cell-averaged samples lose zero mean;
    # Gaussian tails are cheap, so cut three decades below TAIL_REL
    t = np.linspace(0, 20, 200001)
    last = 0.0
    for order in (p - 1, p):
        mag = np.abs(_gaus_derivative(order, t))
        above = np.nonzero(mag >= 1e-3 * TAIL_REL * mag.max())[0]
        last = max(last, float(t[above[-1]]))
    return last


def mother_wavelet(spec: CwtWaveletSpec, t) -> np.ndarray:
    """Point values of the mother wavelet."""
    t = np.asarray(t, dtype=float)
    if spec.family == "gaus":
        return _gaus_norm(spec.order) * _gaus_derivative(spec.order, t)
    osc = np.exp(2j * np.pi * spec.center * t)
    if spec.family == "shan":
        return np.sqrt(spec.bandwidth) * np.sinc(spec.bandwidth * t) * osc
    m = spec.order
    return np.sqrt(spec.bandwidth) * np.sinc(spec.bandwidth * t / m) ** m * osc


def _half_width(spec: CwtWaveletSpec, a: float, n: int) -> int:
    # nothing past +-(n-1) samples can overlap an n-sample signal
    return int(min(np.ceil(spec.tail_support() * a), max(n - 1, 0)))


def sample_wavelet(spec: CwtWaveletSpec, a: float, n: int) -> np.ndarray:
    """Discrete wavelet at scale ``a`` for use on an ``n``-sample signal.

    Returns ``2K + 1`` samples centred on ``t = 0`` (index ``K``). Gaussian
    derivatives are averaged over each unit sample cell using their closed-form
    antiderivative, which keeps the discrete wavelet exactly zero-sum at every
    scale; the oscillating families are point-sampled at ``k / a``.
    """
    if a < 1 or n < 1:
        raise ValueError(f"invalid scale {a} or length {n}")
    k = np.arange(-_half_width(spec, a, n), _half_width(spec, a, n) + 1, dtype=float)
    if spec.family == "gaus":
        hi = _gaus_derivative(spec.order - 1, (k + 0.5) / a)
        lo = _gaus_derivative(spec.order - 1, (k - 0.5) / a)
        return _gaus_norm(spec.order) * a * (hi - lo)
    return mother_wavelet(spec, k / a)


@lru_cache(maxsize=None)
def center_frequency(spec: CwtWaveletSpec) -> float:
    """Dominant frequency of the mother wavelet in cycles per unit time.

    For the modulated families this is the modulation frequency C; for
    Gaussian derivatives it is read off the FFT of a finely sampled wavelet.
    """
    if spec.complex:
        return spec.center
    a = 64
    psi = sample_wavelet(spec, a, 1 << 16)
    nfft = 1 << 18
    spectrum = np.abs(np.fft.rfft(psi, nfft))
    freqs = np.fft.rfftfreq(nfft)
    return float(freqs[np.argmax(spectrum)] * a)


def pseudo_frequency(spec: CwtWaveletSpec, scale, fs: float):
    return center_frequency(spec) * fs / np.asarray(scale, dtype=float)


@dataclass(frozen=True)
class Scalogram:
    coefficients: np.ndarray  # (n_scales, N), complex for complex wavelets
    scales: np.ndarray
    spec: CwtWaveletSpec
    fs: float = 1.0

    def row(self, scale: int) -> np.ndarray:
        idx = np.nonzero(self.scales == scale)[0]
        if idx.size == 0:
            raise KeyError(f"scale {scale} not in grid")
        return self.coefficients[idx[0]]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.coefficients)

    def pseudo_frequencies(self) -> np.ndarray:
        return pseudo_frequency(self.spec, self.scales, self.fs)


@lru_cache(maxsize=512)
def _kernel(spec: CwtWaveletSpec, a: int, n: int) -> np.ndarray:
    # correlation with psi == convolution with the reversed conjugate
    psi = sample_wavelet(spec, a, n)
    k = np.conj(psi[::-1]) if spec.complex else psi[::-1].copy()
    k *= float(a) ** -NORM_EXPONENT
    k.setflags(write=False)
    return k


@lru_cache(maxsize=512)
def _kernel_spectrum(spec: CwtWaveletSpec, a: int, n: int, nfft: int) -> np.ndarray:
    k = _kernel(spec, a, n)
    out = sp_fft.fft(k, nfft) if spec.complex else sp_fft.rfft(k, nfft)
    out.setflags(write=False)
    return out


def _use_direct(n: int, m: int) -> bool:
    nfft = sp_fft.next_fast_len(n + m - 1)
    return n * m < 4.0 * nfft * np.log2(nfft)


def cwt_row(x: np.ndarray, spec: CwtWaveletSpec, a: int, method: str = "auto") -> np.ndarray:
    """Coefficients at a single scale."""
    if a < 1:
        raise ValueError(f"invalid scale {a}")
    n = x.size
    k = _kernel(spec, int(a), n)
    half = (k.size - 1) // 2
    if method == "auto":
        method = "direct" if _use_direct(n, k.size) else "fft"
    if method == "direct":
        full = np.convolve(x, k)
    elif method == "fft":
        nfft = sp_fft.next_fast_len(n + k.size - 1)
        ks = _kernel_spectrum(spec, int(a), n, nfft)
        if spec.complex:
            full = sp_fft.ifft(sp_fft.fft(x, nfft) * ks)
        else:
            full = sp_fft.irfft(sp_fft.rfft(x, nfft) * ks, nfft)
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    return full[half:half + n]


def cwt(series, spec: CwtWaveletSpec, scales: Sequence[int], method: str = "auto") -> Scalogram:
    """Scalogram of ``series`` over the integer ``scales``.

    ``method`` is ``"direct"``, ``"fft"`` or ``"auto"`` (pick per scale by an
    operation-count estimate).
    """
    if isinstance(series, TimeSeries):
        x, fs = series.samples, series.fs
    else:
        x, fs = np.asarray(series, dtype=float), 1.0
    scales = np.asarray(list(scales), dtype=int)
    if x.size == 0 or scales.size == 0:
        raise ValueError("cwt needs a non-empty series and scale grid")
    if np.any(scales < 1):
        raise ValueError(f"invalid scale {scales.min()}")
    dtype = complex if spec.complex else float
    out = np.empty((scales.size, x.size), dtype=dtype)
    for i, a in enumerate(scales):
        out[i] = cwt_row(x, spec, int(a), method)
    return Scalogram(out, scales, spec, fs)


def write_scalogram(path, scal: Scalogram) -> None:
    """CSV matrix (one row per scale) plus a ``.meta`` key=value sidecar."""
    path = Path(path)
    values = scal.magnitude() if scal.spec.complex else scal.coefficients
    np.savetxt(path, values, delimiter=",", fmt="%.10g")
    meta = {
        "wavelet": scal.spec.name,
        "fs_hz": f"{scal.fs:g}",
        "scales": " ".join(str(int(a)) for a in scal.scales),
        "values": "modulus" if scal.spec.complex else "real",
        "normalization": f"a^-{NORM_EXPONENT:g}",
    }
    path.with_suffix(".meta").write_text("".join(f"{k}={v}\n" for k, v in meta.items()))
