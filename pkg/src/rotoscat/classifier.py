"""One-versus-all Gaussian kernel SVM with a pairwise dual solver.

The kernel is k(u, v) = exp(-|u - v|^2 / (2 sigma^2)) with the bandwidth
taken from the average norm of the training vectors. Each binary problem
is solved by sequential updates of a maximal-violating pair with gradient
shrinking, stopping when the KKT violation drops below the tolerance.
"""

import struct
from dataclasses import dataclass

import numpy as np

_MODEL_MAGIC = b"RSKM"
MODEL_FORMAT_VERSION = 1

DEFAULT_TOL = 1e-3
KERNEL_CACHE_LIMIT = 20000
EVAL_BUDGET = 10_000_000


@dataclass
class KernelModel:
    sigma2: float
    C: float
    n_classes: int
    support: np.ndarray  # (n_s, D)
    coeffs: np.ndarray   # (n_classes, n_s), alpha_i * y_i per class
    bias: np.ndarray     # (n_classes,)


def estimate_bandwidth(F, squared=False):
    """Average (squared) Euclidean norm of the training vectors."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] == 0:
        raise ValueError("bandwidth needs a nonempty 2D training matrix")
    norms = np.linalg.norm(F, axis=1)
    s = float(np.mean(norms ** 2 if squared else norms))
    if s <= 0.0:
        raise ValueError("degenerate bandwidth: all training vectors are zero")
    return s


def _kernel_block(A, B, sigma2):
    d2 = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * sigma2))


class _KernelSource:
    """Serves kernel rows, either from a full cached Gram matrix or by
    computing them on demand under an evaluation budget."""

    def __init__(self, X, sigma2):
        self.X = X
        self.sigma2 = sigma2
        self.n = X.shape[0]
        self.evals = 0
        if self.n <= KERNEL_CACHE_LIMIT:
            self.gram = _kernel_block(X, X, sigma2)
        else:
            self.gram = None

    def row(self, i):
        if self.gram is not None:
            return self.gram[i]
        self.evals += self.n
        return _kernel_block(self.X[i:i + 1], self.X, self.sigma2)[0]

    def over_budget(self):
        return self.gram is None and self.evals > EVAL_BUDGET


def _solve_binary(source, y, C, tol):
    """Dual solver for one binary problem. Returns (alpha, bias).

    The gradient is maintained exactly for every variable; shrinking only
    narrows the pair search to variables that can still violate the KKT
    conditions, and the full set is rechecked before accepting convergence.
    """
    n = source.n
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - 1'a
    active = np.ones(n, dtype=bool)
    iter_cap = max(200 * n, 20_000)
    it = 0
    while True:
        it += 1
        if it > iter_cap or source.over_budget():
            gap, _, _ = _violation(alpha, grad, y, C)
            raise RuntimeError(f"dual solver did not converge: KKT gap "
                               f"{gap:.3e} after {it - 1} iterations")
        score = -y * grad
        gap, i, j = _violation(alpha, grad, y, C, mask=active)
        if gap <= tol:
            if active.all():
                break
            gap, i, j = _violation(alpha, grad, y, C)
            if gap <= tol:
                break
            active[:] = True
        ki = source.row(i)
        kj = source.row(j)
        quad = max(ki[i] + kj[j] - 2.0 * ki[j], 1e-12)
        step = (score[i] - score[j]) / quad
        # largest feasible step along (+y_i, -y_j) in alpha
        room_i = C - alpha[i] if y[i] > 0 else alpha[i]
        room_j = C - alpha[j] if y[j] < 0 else alpha[j]
        step = min(step, room_i, room_j)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        grad += step * y * (ki - kj)
        if it % 1000 == 0:
            m_up = score[i]
            m_low = score[j]
            active = _keep_mask(alpha, -y * grad, y, C, m_up, m_low, tol)
            if not active.any():
                active[:] = True
    score = -y * grad
    free = (alpha > 1e-12) & (alpha < C - 1e-12)
    if free.any():
        bias = float(score[free].mean())
    else:
        up, low = _feasible_sets(alpha, y, C)
        if up.any() and low.any():
            bias = float((score[up].max() + score[low].min()) / 2.0)
        else:
            bias = 0.0
    return alpha, bias


def _feasible_sets(alpha, y, C):
    eps = 1e-12
    up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
    low = ((y > 0) & (alpha > eps)) | ((y < 0) & (alpha < C - eps))
    return up, low


def _violation(alpha, grad, y, C, mask=None):
    """Largest KKT violation and the responsible pair of indices."""
    score = -y * grad
    up, low = _feasible_sets(alpha, y, C)
    if mask is not None:
        up &= mask
        low &= mask
    if not up.any() or not low.any():
        return 0.0, -1, -1
    i = int(np.argmax(np.where(up, score, -np.inf)))
    j = int(np.argmin(np.where(low, score, np.inf)))
    return score[i] - score[j], i, j


def _keep_mask(alpha, score, y, C, m_up, m_low, tol):
    """Variables that are free or may still join a violating pair."""
    eps = 1e-12
    at_zero = alpha <= eps
    at_c = alpha >= C - eps
    lo = m_low - 10.0 * tol
    hi = m_up + 10.0 * tol
    keep = ~(at_zero | at_c)
    keep |= at_zero & (((y > 0) & (score > lo)) | ((y < 0) & (score < hi)))
    keep |= at_c & (((y > 0) & (score < hi)) | ((y < 0) & (score > lo)))
    return keep


def train(F, labels, C=1.0, sigma2=None, tol=DEFAULT_TOL):
    """Train one binary SVM per class against the rest."""
    F = np.asarray(F, dtype=np.float64)
    labels = np.asarray(labels)
    n = F.shape[0]
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match {n} rows")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise ValueError("need at least 2 classes to train")
    n_classes = int(classes.max()) + 1
    if sigma2 is None:
        sigma2 = estimate_bandwidth(F)
    if not sigma2 > 0.0:
        raise ValueError(f"bandwidth must be positive, got {sigma2}")
    source = _KernelSource(F, sigma2)
    coeffs = np.zeros((n_classes, n))
    bias = np.zeros(n_classes)
    for c in range(n_classes):
        y = np.where(labels == c, 1.0, -1.0)
        alpha, b = _solve_binary(source, y, C, tol)
        coeffs[c] = alpha * y
        bias[c] = b
    used = np.flatnonzero(np.abs(coeffs).sum(axis=0) > 0.0)
    return KernelModel(sigma2=float(sigma2), C=float(C), n_classes=n_classes,
                       support=F[used].copy(), coeffs=coeffs[:, used].copy(),
                       bias=bias)


def decision_values(model, F, block=1024):
    """Per-class decision values, one row per class."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[1] != model.support.shape[1]:
        raise ValueError(f"dimension mismatch: queries have {F.shape[-1]} "
                         f"columns, model expects {model.support.shape[1]}")
    out = np.empty((model.n_classes, F.shape[0]))
    for start in range(0, F.shape[0], block):
        q = F[start:start + block]
        k = _kernel_block(model.support, q, model.sigma2)
        out[:, start:start + q.shape[0]] = model.coeffs @ k + model.bias[:, None]
    return out


def predict(model, F):
    """Most confident class per query; ties go to the lowest class id."""
    return np.argmax(decision_values(model, F), axis=0)


def dual_objective(model_or_coeffs, F=None, y=None, sigma2=None):
    """Dual objective sum(alpha) - 0.5 a'Qa of one binary problem, for
    solver verification. Accepts raw (alpha, F, y, sigma2)."""
    alpha = np.asarray(model_or_coeffs, dtype=np.float64)
    gram = _kernel_block(F, F, sigma2)
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ gram @ ay)


def save_model(path, model):
    n_s, D = model.support.shape
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<IIII", MODEL_FORMAT_VERSION, model.n_classes,
                             n_s, D))
        fh.write(struct.pack("<dd", model.sigma2, model.C))
        fh.write(model.support.astype("<f8").tobytes())
        fh.write(model.coeffs.astype("<f8").tobytes())
        fh.write(model.bias.astype("<f8").tobytes())


def load_model(path):
    with open(path, "rb") as fh:
        if fh.read(4) != _MODEL_MAGIC:
            raise ValueError("not a kernel model file")
        version, n_classes, n_s, D = struct.unpack("<IIII", fh.read(16))
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        sigma2, C = struct.unpack("<dd", fh.read(16))
        support = np.frombuffer(fh.read(8 * n_s * D), dtype="<f8").reshape(n_s, D).copy()
        coeffs = np.frombuffer(fh.read(8 * n_classes * n_s), dtype="<f8").reshape(n_classes, n_s).copy()
        bias = np.frombuffer(fh.read(8 * n_classes), dtype="<f8").copy()
    return KernelModel(sigma2=sigma2, C=C, n_classes=n_classes,
                       support=support, coeffs=coeffs, bias=bias)
