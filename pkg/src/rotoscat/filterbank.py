"""Fourier-domain Morlet filter banks for images and for the angle axis.

Every filter is built directly on the discrete Fourier grid by folding the
continuous-domain Gaussian transforms over the sampling lattice (alias
summation). This makes the discrete invariants exact instead of merely
approximate: band-pass filters have a true zero at frequency zero, low
passes have unit DC gain, and rotating a filter by a quarter turn is an
index permutation of its samples rather than an interpolation.

Per-scale amplitudes are chosen by a small linear program so that the
Littlewood-Paley sum of the whole family touches 1 from below. That keeps
the wavelet transform non-expansive while capturing as much signal energy
as the filter shapes allow.
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

# Mother wavelet constants. Scale j uses center frequency CENTER_FREQ/2^(j-1)
# and envelope width ENVELOPE_SIGMA*2^(j-1); the slant squeezes the Gaussian
# envelope across the oscillation so neighboring orientations overlap.
CENTER_FREQ = 3.0 * np.pi / 4.0
ENVELOPE_SIGMA = 0.65
ENVELOPE_SLANT = 0.5

# Admitted sag of the Littlewood-Paley sum inside the covered band.
FRAME_SLACK = 0.2

BANK_FORMAT_VERSION = 1
_BANK_MAGIC = b"RSBK"


@dataclass(frozen=True)
class MorletParams:
    """Geometry of the mother Morlet wavelet and its Gaussian low-pass."""

    center_freq: float = CENTER_FREQ
    sigma: float = ENVELOPE_SIGMA
    slant: float = ENVELOPE_SLANT

    def as_dict(self):
        return {
            "center_freq": self.center_freq,
            "sigma": self.sigma,
            "slant": self.slant,
        }


@dataclass
class SpatialFilterBank:
    """Fourier-domain 2D filters sampled on the full grid.

    psi[j-1, l-1] is the band-pass filter at scale j (1..J) and orientation
    theta = l*pi/L (1..L); phi[j-1] is the low pass at scale j. All arrays
    hold the real-valued Fourier transforms of the (complex) spatial
    filters; per-scale amplitudes are already folded in.
    """

    grid_size: int
    J: int
    L: int
    psi: np.ndarray
    phi: np.ndarray
    params: MorletParams
    scale_weights: np.ndarray


@dataclass
class AngularFilterBank:
    """Circular 1D filters of length L on the orientation axis.

    psibar[k-1] is the band-pass filter at angular scale k (1..K), phibar
    the angular low pass; both are stored as real Fourier coefficients.
    """

    L: int
    K: int
    psibar: np.ndarray
    phibar: np.ndarray
    scale_weights: np.ndarray


@dataclass
class LittlewoodPaleyReport:
    """Frame bounds of a spatial bank measured on the full Fourier grid."""

    lp_max: float
    band_min: float
    mean: float
    eta: float
    tol: float
    band_lo: float
    band_hi: float
    passed: bool
    lp_map: np.ndarray = field(repr=False)


def _freq_axis(n):
    # signed DFT sample frequencies in radians, natural (unshifted) order
    return 2.0 * np.pi * np.fft.fftfreq(n)


def _negate_freq(f):
    """Evaluate a Fourier-grid function at -omega (same index order)."""
    n = f.shape[-1]
    neg = (-np.arange(n)) % n
    if f.ndim == 1:
        return f[neg]
    return f[..., neg[:, None], neg[None, :]]


def rotate_quarter(f):
    """Rotate a square periodic grid function by a quarter turn.

    The same index permutation is valid for spatial and Fourier samples
    because the DFT commutes with lattice rotations.
    """
    n = f.shape[-1]
    idx = np.arange(n)
    return f[..., idx[None, :], ((-idx) % n)[:, None]]


def periodize_fourier(f, s):
    """Fold a Fourier grid onto an s-fold coarser lattice.

    The result is the Fourier transform of the spatial filter restricted
    to every s-th sample, normalized so that pass-band gains carry over
    unchanged from the full-resolution filter.
    """
    if s == 1:
        return f
    n = f.shape[-1]
    m = n // s
    if m * s != n:
        raise ValueError(f"stride {s} does not divide grid size {n}")
    return f.reshape(f.shape[:-2] + (s, m, s, m)).sum(axis=(-4, -2))


def _gauss_fourier_2d(n, sigma, slant, theta, xi):
    """Alias-folded Fourier transform of a modulated elliptic Gaussian.

    The spatial window has width sigma along the oscillation direction
    theta and sigma/slant across it; xi is the modulation frequency. Alias
    shifts whose tails cannot reach the base frequency box are skipped.
    """
    w1 = _freq_axis(n)[:, None]
    w2 = _freq_axis(n)[None, :]
    c, s = np.cos(theta), np.sin(theta)
    # inverse covariance of the frequency-domain Gaussian
    a11 = sigma * sigma * (c * c + (s * s) / (slant * slant))
    a22 = sigma * sigma * (s * s + (c * c) / (slant * slant))
    a12 = sigma * sigma * c * s * (1.0 - 1.0 / (slant * slant))
    k1, k2 = xi * c, xi * s
    lam = sigma * min(1.0, 1.0 / slant)  # sqrt of smallest form eigenvalue
    reach = 12.0 / lam
    amax = int(np.ceil((abs(xi) + reach) / (2.0 * np.pi))) + 1
    out = np.zeros((n, n))
    for t1 in range(-amax, amax + 1):
        for t2 in range(-amax, amax + 1):
            m1 = k1 - 2.0 * np.pi * t1
            m2 = k2 - 2.0 * np.pi * t2
            d1 = max(0.0, abs(m1) - np.pi)
            d2 = max(0.0, abs(m2) - np.pi)
            if lam * np.hypot(d1, d2) > 12.0:
                continue
            u1 = w1 - m1
            u2 = w2 - m2
            out += np.exp(-0.5 * (a11 * u1 * u1 + 2.0 * a12 * u1 * u2 + a22 * u2 * u2))
    return out


def _morlet_fourier_2d(n, sigma, slant, theta, xi):
    """Morlet filter: modulated Gaussian minus a scaled low pass.

    The subtraction weight is chosen from the discrete samples so the
    filter's DC coefficient is exactly zero.
    """
    gab = _gauss_fourier_2d(n, sigma, slant, theta, xi)
    low = _gauss_fourier_2d(n, sigma, slant, theta, 0.0)
    kappa = gab[0, 0] / low[0, 0]
    psi = gab - kappa * low
    psi[0, 0] = 0.0
    return psi


def _gauss_fourier_1d(n, sigma, xi):
    w = _freq_axis(n)
    amax = int(np.ceil((abs(xi) + 12.0 / sigma) / (2.0 * np.pi))) + 1
    out = np.zeros(n)
    for t in range(-amax, amax + 1):
        u = w - xi + 2.0 * np.pi * t
        out += np.exp(-0.5 * (sigma * u) ** 2)
    return out


def _morlet_fourier_1d(n, sigma, xi):
    gab = _gauss_fourier_1d(n, sigma, xi)
    low = _gauss_fourier_1d(n, sigma, 0.0)
    psi = gab - (gab[0] / low[0]) * low
    psi[0] = 0.0
    return psi


def _solve_scale_weights(per_scale, cap):
    """Per-scale squared amplitudes maximizing covered energy under a cap.

    per_scale[i] is the unweighted Littlewood-Paley contribution of scale
    i over the frequency grid, cap the pointwise budget left over by the
    low pass. Maximizes total covered mass subject to the pointwise cap,
    then rescales so the tightest frequency touches the cap exactly.
    """
    a = per_scale.reshape(len(per_scale), -1).T
    b = cap.ravel()
    keep = a.sum(axis=1) > 1e-14
    res = linprog(
        -a[keep].sum(axis=0),
        A_ub=a[keep],
        b_ub=b[keep],
        bounds=[(0.0, None)] * a.shape[1],
        method="highs",
    )
    if not res.success:
        raise RuntimeError("scale weight program failed: " + res.message)
    w = res.x
    covered = a[keep] @ w
    pos = covered > 1e-14
    w = w * np.min(b[keep][pos] / covered[pos])
    return w


def build_spatial_bank(d, J, L, params=None):
    """Build the 2D bank on the 2^d x 2^d Fourier grid.

    Filters at orientations above pi/2 are quarter-turn index permutations
    of the directly built ones, so rotation covariance of the bank holds
    bit for bit on the grid.
    """
    if d < 1 or J < 1 or J > d:
        raise ValueError(f"invalid dimensions: need 1 <= J <= d, got J={J}, d={d}")
    if L < 2:
        raise ValueError(f"need at least 2 orientations, got L={L}")
    if params is None:
        params = MorletParams()
    if params.sigma <= 0.0 or params.slant <= 0.0 or params.center_freq <= 0.0:
        raise ValueError("degenerate Morlet parameters: "
                         f"sigma={params.sigma}, slant={params.slant}, "
                         f"center_freq={params.center_freq}")
    n = 2 ** d
    psi = np.zeros((J, L, n, n))
    phi = np.zeros((J, n, n))
    half = L // 2
    for j in range(1, J + 1):
        sigma_j = params.sigma * 2.0 ** (j - 1)
        xi_j = params.center_freq * 2.0 ** (-(j - 1))
        built = L if L % 2 else half
        for ell in range(1, built + 1):
            theta = ell * np.pi / L
            psi[j - 1, ell - 1] = _morlet_fourier_2d(n, sigma_j, params.slant, theta, xi_j)
        if L % 2 == 0:
            for ell in range(half + 1, L + 1):
                psi[j - 1, ell - 1] = rotate_quarter(psi[j - 1, ell - 1 - half])
        g = _gauss_fourier_2d(n, sigma_j, 1.0, 0.0, 0.0)
        phi[j - 1] = g / g[0, 0]
    per_scale = np.empty((J, n, n))
    for j in range(J):
        p2 = psi[j] ** 2
        per_scale[j] = 0.5 * (p2.sum(axis=0) + _negate_freq(p2).sum(axis=0))
    weights = _solve_scale_weights(per_scale, 1.0 - phi[J - 1] ** 2)
    psi *= np.sqrt(weights)[:, None, None, None]
    return SpatialFilterBank(grid_size=n, J=J, L=L, psi=psi, phi=phi,
                             params=params, scale_weights=weights)


def default_angular_scales(L):
    """Largest K with 2^K = L/2, the default angular scale count."""
    k = int(np.log2(L)) - 1
    return max(k, 1)


def build_angular_bank(L, K):
    """Build the circular bank of K Morlet filters of length L."""
    if L < 2:
        raise ValueError(f"need at least 2 angle samples, got L={L}")
    if K < 1 or 2 ** K >= L:
        raise ValueError(f"invalid angular scale count: need 1 <= K < log2(L), "
                         f"got K={K}, L={L}")
    psibar = np.zeros((K, L))
    for k in range(1, K + 1):
        sigma_k = ENVELOPE_SIGMA * 2.0 ** (k - 1)
        xi_k = CENTER_FREQ * 2.0 ** (-(k - 1))
        psibar[k - 1] = _morlet_fourier_1d(L, sigma_k, xi_k)
    g = _gauss_fourier_1d(L, ENVELOPE_SIGMA * 2.0 ** (K - 1), 0.0)
    phibar = g / g[0]
    per_scale = 0.5 * (psibar ** 2 + psibar[:, (-np.arange(L)) % L] ** 2)
    weights = _solve_scale_weights(per_scale, 1.0 - phibar ** 2)
    psibar *= np.sqrt(weights)[:, None]
    return AngularFilterBank(L=L, K=K, psibar=psibar, phibar=phibar,
                             scale_weights=weights)


def littlewood_paley_map(bank):
    """Pointwise frame sum |phi_J|^2 + sum over j,theta of the symmetrized
    squared band-pass responses."""
    lp = bank.phi[bank.J - 1] ** 2
    for j in range(bank.J):
        p2 = bank.psi[j] ** 2
        lp = lp + 0.5 * (p2.sum(axis=0) + _negate_freq(p2).sum(axis=0))
    return lp


def angular_frame_map(abank):
    """Frame sum of the angular bank over its L frequency bins."""
    L = abank.L
    p2 = abank.psibar ** 2
    return abank.phibar ** 2 + 0.5 * (p2.sum(axis=0) + p2[:, (-np.arange(L)) % L].sum(axis=0))


def validate_bank(bank, eta=FRAME_SLACK, tol=1e-6):
    """Measure the frame bounds of a spatial bank.

    The admissible band is the closed annulus between the coarsest and
    finest wavelet center frequencies (padded by one frequency bin when
    that annulus contains no grid point). The report passes when the sum
    never exceeds 1 + tol and never drops below 1 - eta inside the band.
    """
    n = bank.grid_size
    lp = littlewood_paley_map(bank)
    xi = bank.params.center_freq
    lo = xi * 2.0 ** (-(bank.J - 1))
    hi = xi
    w = _freq_axis(n)
    rad = np.hypot(w[:, None], w[None, :])
    shell = (rad >= lo) & (rad <= hi)
    if not shell.any():
        pad = 2.0 * np.pi / n
        shell = (rad >= lo - pad) & (rad <= hi + pad)
    lp_max = float(lp.max())
    band_min = float(lp[shell].min())
    passed = (lp_max <= 1.0 + tol) and (band_min >= 1.0 - eta)
    return LittlewoodPaleyReport(
        lp_max=lp_max,
        band_min=band_min,
        mean=float(lp.mean()),
        eta=eta,
        tol=tol,
        band_lo=lo,
        band_hi=hi,
        passed=passed,
        lp_map=lp,
    )


def bank_cache_key(d, J, L, K, params=None):
    """Stable digest identifying a bank construction."""
    if params is None:
        params = MorletParams()
    payload = json.dumps(
        {"format": BANK_FORMAT_VERSION, "d": d, "J": J, "L": L, "K": K,
         "params": params.as_dict()},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def save_banks(path, sbank, abank):
    """Write both banks to a versioned binary container.

    Layout: magic, u32 version, u32 header length, JSON header, then the
    coefficient blocks in header order as little-endian float64 (complex
    data interleaved real/imaginary).
    """
    d = int(np.log2(sbank.grid_size))
    header = {
        "format": BANK_FORMAT_VERSION,
        "d": d,
        "J": sbank.J,
        "L": sbank.L,
        "K": abank.K,
        "params": sbank.params.as_dict(),
        "spatial_weights": list(map(float, sbank.scale_weights)),
        "angular_weights": list(map(float, abank.scale_weights)),
        "blocks": ["psi", "phi", "psibar", "phibar"],
    }
    raw = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_BANK_MAGIC)
        fh.write(struct.pack("<II", BANK_FORMAT_VERSION, len(raw)))
        fh.write(raw)
        fh.write(sbank.psi.astype("<c16").tobytes())
        fh.write(sbank.phi.astype("<f8").tobytes())
        fh.write(abank.psibar.astype("<c16").tobytes())
        fh.write(abank.phibar.astype("<f8").tobytes())


def load_banks(path):
    """Read banks written by save_banks."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BANK_MAGIC:
            raise ValueError(f"not a filter bank file: bad magic {magic!r}")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != BANK_FORMAT_VERSION:
            raise ValueError(f"unsupported filter bank format version {version}")
        header = json.loads(fh.read(hlen).decode())
        d, J, L, K = header["d"], header["J"], header["L"], header["K"]
        n = 2 ** d
        psi = np.frombuffer(fh.read(J * L * n * n * 16), dtype="<c16")
        phi = np.frombuffer(fh.read(J * n * n * 8), dtype="<f8")
        psibar = np.frombuffer(fh.read(K * L * 16), dtype="<c16")
        phibar = np.frombuffer(fh.read(L * 8), dtype="<f8")
    params = MorletParams(**header["params"])
    sbank = SpatialFilterBank(
        grid_size=n, J=J, L=L,
        psi=np.ascontiguousarray(psi.real).reshape(J, L, n, n),
        phi=phi.reshape(J, n, n).copy(),
        params=params,
        scale_weights=np.asarray(header["spatial_weights"]),
    )
    abank = AngularFilterBank(
        L=L, K=K,
        psibar=np.ascontiguousarray(psibar.real).reshape(K, L),
        phibar=phibar.copy(),
        scale_weights=np.asarray(header["angular_weights"]),
    )
    return sbank, abank
