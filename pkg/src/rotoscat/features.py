"""Log normalization and greedy orthogonal least squares selection.

Selection works per class on a one-versus-all target. At every step the
feature most correlated with the (centered) class indicator is taken, the
remaining dictionary is decorrelated against it and renormalized. Selected
features are kept as strictly linear functionals over the input feature
space, so they apply unchanged to held-out data.

The dictionary update is tracked in factored form: every current
dictionary vector is a scalar multiple of its original column plus a
combination of the already selected functionals. This keeps the per-step
cost at one pass over the feature matrix without copying it per class.
"""

import struct
import warnings
from dataclasses import dataclass

import numpy as np

_DEAD_NORM = 1e-8
_BASIS_MAGIC = b"RSOB"
BASIS_FORMAT_VERSION = 1


@dataclass
class SelectedBasis:
    """Ordered selected functionals in original feature coordinates.

    coeffs[:, m] applied to a feature vector evaluates selected feature m;
    on the training set those evaluations are orthonormal. class_ids and
    ranks record which one-versus-all pass picked the feature and at which
    step; selected holds the winning original column index.
    """

    D: int
    M: int
    n_classes: int
    requested: int
    class_ids: np.ndarray
    ranks: np.ndarray
    selected: np.ndarray
    coeffs: np.ndarray


def log_transform(F, epsilon):
    """Entrywise log(epsilon + value)."""
    F = np.asarray(F, dtype=np.float64)
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if F.size and float(F.min()) < 0.0:
        raise ValueError("negative entry in scattering features; "
                         "upstream transform should produce moduli >= 0")
    return np.log(epsilon + F)


def default_epsilon(F, rel=1e-6):
    """Relative floor: rel times the median nonzero coefficient."""
    F = np.asarray(F)
    nz = F[F > 0]
    if nz.size == 0:
        return rel
    return rel * float(np.median(nz))


def _select_for_class(F, norms, target, k_max):
    """Greedy OLS for one binary target. Returns (selected indices,
    functional coefficient matrix (D, k), evaluation matrix (n, k))."""
    n, D = F.shape
    a = np.zeros(D)
    live = norms > _DEAD_NORM
    a[live] = 1.0 / norms[live]
    rho = a * (F.T @ target)
    B = np.zeros((D, k_max))
    W = np.zeros((D, k_max))
    V = np.zeros((n, k_max))
    chosen = []
    for k in range(k_max):
        if not live.any():
            break
        cand = np.where(live, np.abs(rho), -1.0)
        p = int(np.argmax(cand))
        if cand[p] < 0.0:
            break
        # resolve the winner into original coordinates and evaluations
        w = np.zeros(D)
        w[p] = a[p]
        if k:
            w += W[:, :k] @ B[p, :k]
        v = a[p] * F[:, p]
        if k:
            v += V[:, :k] @ B[p, :k]
        W[:, k] = w
        V[:, k] = v
        chosen.append(p)
        live[p] = False
        # correlations of every live column with the new functional
        t = F.T @ v
        c = a * t
        if k:
            c += B[:, :k] @ (V[:, :k].T @ v)
        resid = 1.0 - c * c
        dead = live & (resid < _DEAD_NORM * _DEAD_NORM)
        live &= ~dead
        if live.any():
            r = np.sqrt(resid[live])
            rho_p = rho[p]
            rho[live] = (rho[live] - c[live] * rho_p) / r
            a[live] /= r
            if k:
                B[live, :k] /= r[:, None]
            B[live, k] = -c[live] / r
    k = len(chosen)
    return chosen, W[:, :k], V[:, :k]


def ols_select(F, labels, k_per_class):
    """Select k_per_class features per class and pool them.

    F is the (already log-transformed) n x D training matrix. Features are
    unit-normalized over the training set before selection; the class
    indicator is centered so correlations ignore the class prior. Ties go
    to the lowest column index. When a class exhausts its dictionary early
    the basis is truncated for that class with a warning.
    """
    F = np.asarray(F, dtype=np.float64)
    labels = np.asarray(labels)
    n, D = F.shape
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match {n} rows")
    classes = np.unique(labels)
    n_classes = int(classes.max()) + 1
    if set(classes.tolist()) != set(range(n_classes)):
        raise ValueError("class ids must be dense in [0, n_classes)")
    if not 1 <= k_per_class <= min(n, D):
        raise ValueError(f"k_per_class must be in [1, min(n, D)] = "
                         f"[1, {min(n, D)}], got {k_per_class}")
    norms = np.linalg.norm(F, axis=0)
    ids, ranks, selected, coeffs = [], [], [], []
    for c in range(n_classes):
        target = (labels == c).astype(np.float64)
        target -= target.mean()
        chosen, W, _ = _select_for_class(F, norms, target, k_per_class)
        if len(chosen) < k_per_class:
            warnings.warn(f"class {c}: dictionary exhausted after "
                          f"{len(chosen)} of {k_per_class} selections")
        ids.extend([c] * len(chosen))
        ranks.extend(range(1, len(chosen) + 1))
        selected.extend(chosen)
        coeffs.append(W)
    coeffs = np.hstack(coeffs) if coeffs else np.zeros((D, 0))
    return SelectedBasis(
        D=D, M=coeffs.shape[1], n_classes=n_classes, requested=k_per_class,
        class_ids=np.asarray(ids, dtype=np.int32),
        ranks=np.asarray(ranks, dtype=np.int32),
        selected=np.asarray(selected, dtype=np.int64),
        coeffs=coeffs)


def project(basis, F):
    """Evaluate the selected functionals on a feature matrix."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[1] != basis.D:
        raise ValueError(f"dimension mismatch: features have {F.shape[-1]} "
                         f"columns, basis expects {basis.D}")
    return F @ basis.coeffs


def save_basis(path, basis):
    with open(path, "wb") as fh:
        fh.write(_BASIS_MAGIC)
        fh.write(struct.pack("<IIIII", BASIS_FORMAT_VERSION, basis.D,
                             basis.M, basis.n_classes, basis.requested))
        fh.write(basis.class_ids.astype("<i4").tobytes())
        fh.write(basis.ranks.astype("<i4").tobytes())
        fh.write(basis.selected.astype("<i8").tobytes())
        fh.write(basis.coeffs.astype("<f8").tobytes())


def load_basis(path):
    with open(path, "rb") as fh:
        if fh.read(4) != _BASIS_MAGIC:
            raise ValueError("not a selected basis file")
        version, D, M, n_classes, requested = struct.unpack("<IIIII", fh.read(20))
        if version != BASIS_FORMAT_VERSION:
            raise ValueError(f"unsupported basis format version {version}")
        class_ids = np.frombuffer(fh.read(4 * M), dtype="<i4").copy()
        ranks = np.frombuffer(fh.read(4 * M), dtype="<i4").copy()
        selected = np.frombuffer(fh.read(8 * M), dtype="<i8").copy()
        coeffs = np.frombuffer(fh.read(8 * D * M), dtype="<f8").reshape(D, M).copy()
    return SelectedBasis(D=D, M=M, n_classes=n_classes, requested=requested,
                         class_ids=class_ids, ranks=ranks, selected=selected,
                         coeffs=coeffs)
