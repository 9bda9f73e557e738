"""Slow reference implementations used to pin the fast paths.

Everything here is deliberately naive: circulant matrix products instead
of FFTs, from-scratch Gram-Schmidt instead of incremental updates, and a
dense QP instead of the working-set solver. The only shared input with
the code under test is the filter bank itself.
"""

import numpy as np


def circulant_conv2(x, h):
    """Circular convolution via an explicit (n^2, n^2) circulant matrix."""
    n = x.shape[-1]
    p = np.arange(n)
    d1 = (p[:, None] - p[None, :]) % n
    mat = h[d1[:, None, :, None], d1[None, :, None, :]].reshape(n * n, n * n)
    return (mat @ x.reshape(-1, n * n).T).T.reshape(x.shape[:-2] + (n, n))


def circulant_conv1(v, h, axis):
    """Circular convolution along one axis with an explicit matrix."""
    L = v.shape[axis]
    t = np.arange(L)
    mat = h[(t[:, None] - t[None, :]) % L]
    moved = np.moveaxis(v, axis, 0)
    out = np.tensordot(mat, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def spatial_filter(fourier, stride=1):
    """Spatial-domain filter taps on a stride-coarsened lattice."""
    h = np.fft.ifft2(fourier)
    if stride == 1:
        return h
    return stride * stride * h[::stride, ::stride]


def oracle_w1(x, bank):
    """First layer by direct convolution: modulus bands and low passes,
    decimated by index slicing."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    lowpass, band = [], []
    for j in range(1, bank.J + 1):
        s = 2 ** (j - 1)
        low = circulant_conv2(x, np.fft.ifft2(bank.phi[j - 1])).real
        lowpass.append(low[..., ::s, ::s])
        bnd = np.stack([
            np.abs(circulant_conv2(x, np.fft.ifft2(bank.psi[j - 1, t])))
            for t in range(bank.L)
        ], axis=1)
        band.append(bnd[..., ::s, ::s])
    return lowpass, band


def oracle_w2(band, sbank, abank, rotations=True):
    """Second layer by direct convolution on the stored lattices.

    band is the oracle_w1 band list. Returns {(j1, j2, beta): {k: array}}
    mirroring the fast path, with modulus applied after the joint
    spatial-angular linear filtering.
    """
    J, L = sbank.J, sbank.L
    out = {}
    for j1 in range(1, J):
        s1 = 2 ** (j1 - 1)
        v = band[j1 - 1]
        for j2 in range(j1 + 1, J + 1):
            extra = 2 ** (j2 - j1)
            for beta in range(1, L + 1):
                taps = spatial_filter(sbank.psi[j2 - 1, beta - 1], s1)
                spat = circulant_conv2(v.astype(np.complex128), taps)
                entry = {}
                if rotations:
                    for k in range(abank.K + 1):
                        h = abank.phibar if k == 0 else abank.psibar[k - 1]
                        taps1 = np.fft.ifft(h)
                        ang = circulant_conv1(spat, taps1, axis=1)
                        r = 2 ** (abank.K - 1) if k == 0 else 2 ** (k - 1)
                        entry[k] = np.abs(ang)[:, ::r, ::extra, ::extra]
                else:
                    entry[-1] = np.abs(spat)[..., ::extra, ::extra]
                out[(j1, j2, beta)] = entry
    return out


def oracle_average(frame, bank, rate, out_side):
    """Final low-pass on a frame at the given rate, decimated to the grid."""
    taps = spatial_filter(bank.phi[bank.J - 1], rate)
    taps = (taps / taps.sum()).real
    side = frame.shape[-1]
    stride = side // out_side
    avg = circulant_conv2(np.asarray(frame, dtype=np.float64), taps).real
    return avg[..., ::stride, ::stride]


def oracle_scatter_flat(x, sbank, abank, order=2, rotations=True):
    """Full transform by the direct path, flattened in the same path order
    as the fast implementation."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    J, L, K = sbank.J, sbank.L, abank.K
    g = sbank.grid_size // 2 ** J
    lowpass, band = oracle_w1(x, sbank)
    pieces = {}
    for c in range(x.shape[0]):
        pieces[(0, c, 0, 0, 0, 0, 0)] = lowpass[J - 1][c, ::2, ::2]
    if order >= 1:
        for j in range(1, J + 1):
            avg = oracle_average(band[j - 1], sbank, 2 ** (j - 1), g)
            for c in range(x.shape[0]):
                for t in range(L):
                    pieces[(1, c, j, t + 1, 0, 0, 0)] = avg[c, t]
    if order >= 2 and J >= 2:
        l2 = oracle_w2(band, sbank, abank, rotations=rotations)
        for (j1, j2, beta), entry in l2.items():
            for k, v in entry.items():
                avg = oracle_average(v, sbank, 2 ** (j2 - 1), g)
                r = (2 ** (K - 1) if k == 0 else 2 ** (k - 1)) if k >= 0 else 1
                for c in range(x.shape[0]):
                    for ti in range(avg.shape[1]):
                        pieces[(2, c, j1, 1 + ti * r, j2, beta, k)] = avg[c, ti]
    flat = [pieces[p].ravel() for p in sorted(pieces)]
    return np.concatenate(flat)


def greedy_ols_oracle(F, target, k):
    """Exhaustive greedy selection with from-scratch orthonormalization.

    At each step every remaining unit-normalized feature is explicitly
    orthogonalized against the selected set and the one most correlated
    with the target wins; ties go to the lowest index.
    """
    F = np.asarray(F, dtype=np.float64)
    n, D = F.shape
    norms = np.linalg.norm(F, axis=0)
    cols = np.where(norms > 1e-8, F / np.where(norms > 1e-8, norms, 1.0), 0.0)
    alive = norms > 1e-8
    selected = []
    basis = np.zeros((n, 0))
    for _ in range(k):
        best, best_val = -1, -np.inf
        for p in range(D):
            if p in selected or not alive[p]:
                continue
            u = cols[:, p] - basis @ (basis.T @ cols[:, p])
            nn = np.linalg.norm(u)
            if nn * nn < 1e-16:
                continue
            val = abs(np.dot(u / nn, target))
            if val > best_val + 1e-12:
                best, best_val = p, val
        if best < 0:
            break
        u = cols[:, best] - basis @ (basis.T @ cols[:, best])
        basis = np.hstack([basis, (u / np.linalg.norm(u))[:, None]])
        selected.append(best)
    return selected, basis


def qp_dual_oracle(F, y, C, sigma2):
    """Reference dual optimum of the binary SVM via a dense QP solver."""
    from cvxopt import matrix, solvers

    F = np.asarray(F, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = F.shape[0]
    d2 = ((F[:, None, :] - F[None, :, :]) ** 2).sum(-1)
    K = np.exp(-d2 / (2.0 * sigma2))
    Q = (y[:, None] * y[None, :]) * K
    P = matrix(Q)
    q = matrix(-np.ones(n))
    G = matrix(np.vstack([-np.eye(n), np.eye(n)]))
    h = matrix(np.concatenate([np.zeros(n), C * np.ones(n)]))
    A = matrix(y[None, :])
    b = matrix(np.zeros(1))
    solvers.options["show_progress"] = False
    solvers.options["abstol"] = 1e-10
    solvers.options["reltol"] = 1e-10
    sol = solvers.qp(P, q, G, h, A, b)
    alpha = np.asarray(sol["x"]).ravel()
    obj = alpha.sum() - 0.5 * alpha @ Q @ alpha
    return alpha, float(obj)
