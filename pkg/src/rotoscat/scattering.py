"""Scattering transform: wavelet modulus cascade with final averaging.

The first layer convolves the image with every band-pass filter, takes the
complex modulus and keeps a factor-2 oversampled grid at each scale. The
second layer convolves those maps separably: a 2D spatial wavelet at a
strictly coarser scale, then a circular 1D wavelet along the orientation
axis, modulus again, and subsampling along both variables. A final low
pass reduces every retained map to a small spatial grid.

All convolutions are circular and computed in the Fourier domain. Because
subsampling is plain sample selection and the modulus is pointwise, the
Fourier-side folding used here is an exact rearrangement of convolve,
rectify, then decimate.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .filterbank import (
    build_angular_bank,
    build_spatial_bank,
    default_angular_scales,
    periodize_fourier,
)


@dataclass
class ScatteringConfig:
    """Transform-level knobs. J defaults to d-2 at call time, K to the
    largest angular scale with 2^K = L/2."""

    J: int = 0
    L: int = 8
    K: int = 0
    order: int = 2
    rotations: bool = True
    boundary: str = "periodic"

    def resolved(self, d):
        J = self.J if self.J > 0 else max(d - 2, 1)
        K = self.K if self.K > 0 else default_angular_scales(self.L)
        return J, self.L, K


@dataclass
class Layer1:
    """First-order maps: lowpass[j-1] holds x*phi_j, band[j-1] holds the
    wavelet modulus maps at scale j, both sampled at rate 2^(j-1)."""

    grid_size: int
    channels: int
    J: int
    L: int
    lowpass: list
    band: list


@dataclass
class Layer2:
    """Second-order maps indexed by (j1, j2, beta); each entry maps the
    angular band k to an array of shape (channels, angles, side, side).

    k >= 1 are angular wavelet bands (axis length L/2^(k-1)), k = 0 is the
    retained angular low-pass band (axis length L/2^(K-1)), and k = -1
    marks the translation-only variant where the orientation axis passes
    through untouched.
    """

    grid_size: int
    channels: int
    J: int
    L: int
    K: int
    rotations: bool
    maps: dict


@dataclass
class ScatteringOutput:
    """Averaged coefficients with deterministic path ordering.

    Paths are 7-tuples (order, channel, j1, theta, j2, beta, k) ordered
    lexicographically; each path owns one grid x grid spatial map. Scale,
    angle and orientation indices are 1-based; unused fields are 0.
    """

    d: int
    J: int
    L: int
    K: int
    channels: int
    order: int
    rotations: bool
    grid: int
    order0: np.ndarray
    order1: np.ndarray
    order2: dict = field(repr=False)

    def paths(self):
        return enumerate_paths(self.J, self.L, self.K, self.channels,
                               order=self.order, rotations=self.rotations)

    def counts(self):
        g2 = self.grid * self.grid
        c = {0: self.channels * g2, 1: 0, 2: 0}
        if self.order >= 1:
            c[1] = self.channels * self.J * self.L * g2
        if self.order >= 2:
            per = sum(1 for p in self.paths() if p[0] == 2)
            c[2] = per * g2
        return c

    def _slice(self, path):
        order, ch, j1, theta, j2, beta, k = path
        if order == 0:
            return self.order0[ch]
        if order == 1:
            return self.order1[ch, j1 - 1, theta - 1]
        rate = _angular_rate(k, self.K)
        return self.order2[(j1, j2, beta)][k][ch, (theta - 1) // rate]

    def flatten(self):
        """Feature vector: paths in lexicographic order, each contributing
        its grid map in row-major order."""
        return np.concatenate([self._slice(p).ravel() for p in self.paths()])

    def path_table(self):
        """Per-column path metadata aligned with flatten()."""
        g2 = self.grid * self.grid
        rows = np.asarray(self.paths(), dtype=np.int16)
        return np.repeat(rows, g2, axis=0)


def _angular_rate(k, K):
    if k <= 0:
        return 2 ** (K - 1) if k == 0 else 1
    return 2 ** (k - 1)


def _decimate_fourier(prod, s):
    # exact Fourier-side form of y[p] = Y[s p]
    if s == 1:
        return prod
    return periodize_fourier(prod, s) / (s * s)


def _decimate_fourier_1d(prod, r, axis):
    if r == 1:
        return prod
    L = prod.shape[axis]
    m = L // r
    moved = np.moveaxis(prod, axis, 0)
    folded = moved.reshape((r, m) + moved.shape[1:]).sum(axis=0) / r
    return np.moveaxis(folded, 0, axis)


def _as_image(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[-1] != x.shape[-2]:
        raise ValueError(f"expected a square image (channels, n, n), got {x.shape}")
    n = x.shape[-1]
    if n & (n - 1) or n < 2:
        raise ValueError(f"image side must be a power of two, got {n}")
    if not np.isfinite(x).all():
        raise ValueError("image contains non-finite values")
    return x


def _lowpass_at(bank, j, stride):
    """phi_j folded to a coarser lattice, re-normalized to unit DC gain so
    averaging a constant frame returns that constant exactly."""
    ph = periodize_fourier(bank.phi[j - 1], stride)
    return ph / ph[..., 0, 0]


def wavelet_modulus_w1(x, bank):
    """First wavelet modulus layer plus the low-pass pyramid."""
    x = _as_image(x)
    n = bank.grid_size
    if x.shape[-1] != n:
        raise ValueError(f"dimension mismatch: image side {x.shape[-1]}, "
                         f"bank grid {n}")
    xhat = np.fft.fft2(x)
    lowpass, band = [], []
    for j in range(1, bank.J + 1):
        s = 2 ** (j - 1)
        low = np.fft.ifft2(_decimate_fourier(xhat * bank.phi[j - 1], s)).real
        bnd = np.abs(np.fft.ifft2(_decimate_fourier(
            xhat[:, None] * bank.psi[j - 1], s)))
        lowpass.append(low)
        band.append(bnd)
    return Layer1(grid_size=n, channels=x.shape[0], J=bank.J, L=bank.L,
                  lowpass=lowpass, band=band)


def roto_translation_w2(l1, sbank, abank, rotations=True):
    """Second layer: spatial wavelet at j2 > j1, then a circular wavelet
    along the orientation axis, modulus, and subsampling of both axes.

    With rotations=False the orientation axis is left untouched and each
    band map is filtered purely spatially (k = -1 entries).
    """
    if l1.L != sbank.L or (rotations and l1.L != abank.L):
        raise ValueError(f"bank mismatch: layer has L={l1.L}, spatial bank "
                         f"L={sbank.L}" + (f", angular bank L={abank.L}"
                                           if rotations else ""))
    if l1.grid_size != sbank.grid_size:
        raise ValueError(f"bank mismatch: layer grid {l1.grid_size}, "
                         f"bank grid {sbank.grid_size}")
    J, L = l1.J, l1.L
    K = abank.K if rotations else 0
    maps = {}
    for j1 in range(1, J):
        s1 = 2 ** (j1 - 1)
        v = l1.band[j1 - 1]
        vhat = np.fft.fft2(v)
        if rotations:
            vhat = np.fft.fft(vhat, axis=1)
        for j2 in range(j1 + 1, J + 1):
            extra = 2 ** (j2 - j1)
            for beta in range(1, L + 1):
                pfold = periodize_fourier(sbank.psi[j2 - 1, beta - 1], s1)
                prod = _decimate_fourier(vhat * pfold, extra)
                entry = {}
                if rotations:
                    for k in range(abank.K + 1):
                        h = abank.phibar if k == 0 else abank.psibar[k - 1]
                        r = _angular_rate(k, abank.K)
                        q = _decimate_fourier_1d(
                            prod * h[:, None, None], r, axis=1)
                        entry[k] = np.abs(np.fft.ifft(np.fft.ifft2(q), axis=1))
                else:
                    entry[-1] = np.abs(np.fft.ifft2(prod))
                maps[(j1, j2, beta)] = entry
    return Layer2(grid_size=l1.grid_size, channels=l1.channels, J=J, L=L,
                  K=K, rotations=rotations, maps=maps)


def average_frame(frame, bank, rate, out_side=None):
    """Convolve a frame sampled at the given rate with phi_J and decimate
    to the output grid (side grid_size/2^J by default)."""
    frame = np.asarray(frame, dtype=np.float64)
    side = frame.shape[-1]
    if side * rate != bank.grid_size:
        raise ValueError(f"frame side {side} inconsistent with rate {rate} "
                         f"and grid {bank.grid_size}")
    if out_side is None:
        out_side = bank.grid_size // 2 ** bank.J
    stride = side // out_side
    ph = _lowpass_at(bank, bank.J, rate)
    fhat = np.fft.fft2(frame) * ph
    return np.fft.ifft2(_decimate_fourier(fhat, stride)).real


def average_aj(maps, bank):
    """Apply the final low pass to every frame of a layer.

    Returns an array (channels, J, L, g, g) for a first-order layer and a
    dict mirroring Layer2.maps for a second-order layer.
    """
    if isinstance(maps, Layer1):
        g = bank.grid_size // 2 ** bank.J
        out = np.empty((maps.channels, maps.J, maps.L, g, g))
        for j in range(1, maps.J + 1):
            out[:, j - 1] = average_frame(maps.band[j - 1], bank, 2 ** (j - 1))
        return out
    if isinstance(maps, Layer2):
        out = {}
        for (j1, j2, beta), entry in maps.maps.items():
            out[(j1, j2, beta)] = {
                k: average_frame(v, bank, 2 ** (j2 - 1))
                for k, v in entry.items()
            }
        return out
    raise TypeError(f"cannot average object of type {type(maps).__name__}")


def _symmetrize(x):
    return np.concatenate(
        [np.concatenate([x, x[..., :, ::-1]], axis=-1),
         np.concatenate([x[..., ::-1, :], x[..., ::-1, ::-1]], axis=-1)],
        axis=-2)


def scatter(x, config=None, banks=None):
    """Full transform: averaged order 0, 1 and 2 coefficient maps.

    banks may carry a prebuilt (spatial, angular) pair matching the
    resolved configuration; otherwise they are built on the fly.
    """
    if config is None:
        config = ScatteringConfig()
    x = _as_image(x)
    crop = None
    if config.boundary == "symmetric":
        x = _symmetrize(x)
        crop = x.shape[-1] // 2
    elif config.boundary != "periodic":
        raise ValueError(f"unknown boundary mode {config.boundary!r}")
    n = x.shape[-1]
    d = int(np.log2(n))
    J, L, K = config.resolved(d if crop is None else d - 1)
    if J > d:
        raise ValueError(f"J={J} too deep for image side {n}")
    if banks is not None:
        sbank, abank = banks
        if sbank.grid_size != n or sbank.J != J or sbank.L != L:
            raise ValueError("prebuilt bank does not match the configuration")
    else:
        sbank = build_spatial_bank(d, J, L)
        abank = build_angular_bank(L, K)
    g = n // 2 ** J
    l1 = wavelet_modulus_w1(x, sbank)
    # order 0: the deepest low pass already holds x*phi_J at rate 2^(J-1)
    order0 = l1.lowpass[J - 1][..., ::2, ::2]
    order1 = average_aj(l1, sbank)
    order2 = {}
    if config.order >= 2 and J >= 2:
        l2 = roto_translation_w2(l1, sbank, abank, rotations=config.rotations)
        order2 = average_aj(l2, sbank)
    if crop is not None:
        gc = g // 2
        order0 = order0[..., :gc, :gc]
        order1 = order1[..., :gc, :gc]
        order2 = {key: {k: v[..., :gc, :gc] for k, v in entry.items()}
                  for key, entry in order2.items()}
        g = gc
    return ScatteringOutput(
        d=d, J=J, L=L, K=K, channels=x.shape[0], order=config.order,
        rotations=config.rotations, grid=g,
        order0=order0, order1=order1, order2=order2)


def count_frames(j, L):
    """Closed-form frame count at depth j: 1 + L j + L^2 j (j - 1)."""
    if j < 1:
        raise ValueError(f"depth must be >= 1, got {j}")
    return 1 + L * j + L * L * j * (j - 1)


def completeness_value(J, L):
    return 2.0 ** (-2 * J) * L * L * J * J


def completeness_check(J, L):
    """Whether 2^(-2J) L^2 J^2 >= 1."""
    return completeness_value(J, L) >= 1.0


@lru_cache(maxsize=32)
def _path_tuples(J, L, K, channels, order, rotations):
    paths = []
    for c in range(channels):
        paths.append((0, c, 0, 0, 0, 0, 0))
    if order >= 1:
        for c in range(channels):
            for j in range(1, J + 1):
                for ell in range(1, L + 1):
                    paths.append((1, c, j, ell, 0, 0, 0))
    if order >= 2:
        ks = list(range(K + 1)) if rotations else [-1]
        for c in range(channels):
            for j1 in range(1, J):
                for j2 in range(j1 + 1, J + 1):
                    for beta in range(1, L + 1):
                        for k in ks:
                            r = _angular_rate(k, K)
                            for t in range(L // r):
                                paths.append((2, c, j1, 1 + t * r, j2, beta, k))
    paths.sort()
    return tuple(paths)


def enumerate_paths(J, L, K, channels=1, order=2, rotations=True):
    """All coefficient paths of a configuration in lexicographic order.

    Pure bookkeeping: the list only depends on the shape parameters, and
    scatter() emits its flat view in exactly this order.
    """
    return list(_path_tuples(J, L, K, channels, order, rotations))
