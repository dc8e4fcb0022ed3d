"""Low-rank spectrogram factorization with orthogonal non-negative filters.

Implements four decompositions of a non-negative spectrogram:

* ``truncated_svd`` -- rank-J least-squares approximation underpinning the
  subspace methods;
* ``onmfs`` -- orthogonal NMF by independent subspace sampling with an
  exhaustive sign search per candidate;
* ``ss_onmf`` -- the stochastic sampled variant: a Markov chain of candidate
  mixing matrices driven by Laplacian perturbations whose scale decays from
  1 to a small floor, with candidate acceptance gated on objective increase,
  factor rank, per-filter minimum bandwidth, and bandwidth non-uniformity;
* ``nmf_mu`` -- plain NMF with Euclidean multiplicative updates, kept as a
  baseline without orthogonality constraints.

In the orthogonal models the columns of ``W`` have pairwise disjoint
supports and unit l2 norm, so ``W^T W`` is exactly the identity on nonempty
columns and each column can be read directly as a band filter response.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .signals import _format_float


class NoAcceptedCandidateError(RuntimeError):
    """Raised when every sampled candidate fails the acceptance gates."""

    def __init__(self, message: str, gate_failures: dict[str, int] | None = None):
        super().__init__(message)
        self.gate_failures = dict(gate_failures or {})


@dataclass(frozen=True)
class FactorModel:
    """Result of one factorization: filters, time profiles, provenance."""

    w: np.ndarray               # I x R, non-negative
    h: np.ndarray               # T x R, non-negative
    objective: float
    rank: int
    tsvd_rank: int
    seed: int
    accepted_steps: int = 0
    gate_failures: dict = field(default_factory=dict)
    accepted_objectives: tuple = ()


@dataclass(frozen=True)
class SsOnmfConfig:
    rank: int
    tsvd_rank: int
    max_iters: int = 20000
    min_bandwidth_factor: float = 0.01
    beta_floor: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.rank < 2:
            raise ValueError("rank must be >= 2")
        if self.tsvd_rank < self.rank:
            raise ValueError("tsvd_rank must be >= rank")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.min_bandwidth_factor < 1:
            raise ValueError("min_bandwidth_factor must be in (0, 1)")
        if not 0 < self.beta_floor < 1:
            raise ValueError("beta_floor must be in (0, 1)")


def truncated_svd(y: np.ndarray, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best rank-j approximation factors (U, singular values, V)."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError("input must be a matrix")
    if not np.all(np.isfinite(y)):
        raise ValueError("input contains non-finite entries")
    if not 1 <= j <= min(y.shape):
        raise ValueError("truncation rank out of range")
    u, s, vt = np.linalg.svd(y, full_matrices=False)
    return u[:, :j], s[:j], vt[:j].T


def beta_schedule(k: int, beta_floor: float) -> float:
    """Perturbation scale at iteration k: max(beta_floor, 1 - tanh(k))."""
    if not 0 < beta_floor < 1:
        raise ValueError("beta_floor must be in (0, 1)")
    return max(beta_floor, 1.0 - float(np.tanh(k)))


def _row_maxima(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row argmax column and its value; ties go to the lowest column."""
    rbar = np.argmax(q, axis=1)
    qbar = q[np.arange(q.shape[0]), rbar]
    return rbar, qbar


def _scatter_columns(shape: tuple[int, int], rbar: np.ndarray, qbar: np.ndarray) -> np.ndarray:
    """Build W by placing each row's maximum (when >= 0) in its column and
    normalizing nonempty columns to unit l2 norm."""
    w = np.zeros(shape)
    keep = qbar >= 0
    rows = np.arange(shape[0])[keep]
    w[rows, rbar[keep]] = qbar[keep]
    norms = np.linalg.norm(w, axis=0)
    nonzero = norms > 0
    w[:, nonzero] /= norms[nonzero]
    return w


def update_w(q: np.ndarray) -> tuple[np.ndarray, float]:
    """Optimal disjoint-support assignment for one sampled component matrix.

    Each row goes to the column holding its maximum entry; rows whose
    maximum is negative stay unassigned.  Columns are the normalized
    restrictions of those maxima, and the objective is the sum of squared
    positive row maxima.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] < 1:
        raise ValueError("input must be an I x R matrix")
    rbar, qbar = _row_maxima(q)
    positive = qbar > 0
    psi = float(np.sum(qbar[positive] ** 2))
    w = _scatter_columns(q.shape, rbar, qbar)
    return w, psi


def _sign_objectives(q: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Objective of the support assignment for each sign vector.

    The assignment objective separates over rows: row i contributes
    ``max(0, max_r s_r * q_ir)^2``.  Evaluated for a batch of sign vectors
    without materializing each candidate W.
    """
    n_rows = q.shape[0]
    best = np.full((signs.shape[0], n_rows), -np.inf)
    for r in range(q.shape[1]):
        np.maximum(best, np.outer(signs[:, r], q[:, r]), out=best)
    np.maximum(best, 0.0, out=best)
    return np.einsum("bi,bi->b", best, best)


def update_w_onmfs(q: np.ndarray, batch: int = 4096) -> np.ndarray:
    """Sign-enumerating support assignment.

    Evaluates all 2^R column sign flips of ``q``, builds the disjoint
    supports for each, and returns the candidate with the largest assignment
    objective.  Ties go to the lowest enumeration index (sign vectors are
    counted with column 0 as the least-significant bit, +1 first).
    """
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] < 1:
        raise ValueError("input must be an I x R matrix")
    n_rank = q.shape[1]
    if n_rank > 16:
        raise ValueError("rank too large for sign enumeration (max 16)")
    n_signs = 1 << n_rank
    bits = np.arange(n_rank)

    best_value = -np.inf
    best_index = 0
    for start in range(0, n_signs, batch):
        idx = np.arange(start, min(start + batch, n_signs))
        signs = 1.0 - 2.0 * ((idx[:, None] >> bits) & 1)
        values = _sign_objectives(q, signs)
        local = int(np.argmax(values))
        if values[local] > best_value:
            best_value = float(values[local])
            best_index = start + local
    best_signs = 1.0 - 2.0 * ((best_index >> bits) & 1)
    q_signed = q * best_signs
    rbar, qbar = _row_maxima(q_signed)
    return _scatter_columns(q.shape, rbar, qbar)


def onmfs(y: np.ndarray, tsvd_rank: int, rank: int, iters: int, seed: int = 0) -> FactorModel:
    """Orthogonal NMF through independent subspace sampling.

    Draws ``iters`` candidate mixing matrices with standard Gaussian entries
    (columns normalized), maps each through the rank-J subspace, runs the
    sign-enumerating support assignment, and keeps the candidate maximizing
    ``||Z^T W||_F^2``.
    """
    y = np.asarray(y, dtype=np.float64)
    if iters < 1:
        raise NoAcceptedCandidateError("no accepted candidate: zero iterations")
    if not np.any(y > 0):
        raise ValueError("degenerate input: all zero")
    u, s, _ = truncated_svd(y, tsvd_rank)
    z = np.ascontiguousarray(u * s)
    rng = np.random.default_rng(seed)

    best_w = None
    best_value = -np.inf
    for _ in range(iters):
        c = rng.standard_normal((tsvd_rank, rank))
        norms = np.linalg.norm(c, axis=0)
        c /= np.where(norms > 0, norms, 1.0)
        w = update_w_onmfs(z @ c)
        value = float(np.sum((z.T @ w) ** 2))
        if value > best_value:
            best_value = value
            best_w = w
    h = y.T @ best_w
    return FactorModel(best_w, h, best_value, rank, tsvd_rank, seed,
                       accepted_steps=iters)


def ss_onmf(y: np.ndarray, config: SsOnmfConfig) -> FactorModel:
    """Stochastic sampled orthogonal NMF.

    State is a mixing matrix C (zero-initialized).  Each iteration perturbs
    C with unit-scale Laplacian noise scaled by the decaying schedule,
    projects columns onto the unit sphere, and forms a candidate assignment.
    The candidate replaces the state only if it passes all gates:

    * assignment objective strictly increased,
    * more than one nonempty filter,
    * every filter wider than ``min_bandwidth_factor`` times the bin count,
    * bandwidth spread (max - min) exceeding the mean bandwidth.

    Failing everything for ``max_iters`` iterations raises
    ``NoAcceptedCandidateError`` carrying per-gate failure counts.
    """
    y = np.asarray(y, dtype=np.float64)
    if not np.any(y > 0):
        raise ValueError("degenerate input: all zero")
    n_bins = y.shape[0]
    rank, j = config.rank, config.tsvd_rank
    u, s, _ = truncated_svd(y, j)
    z = np.ascontiguousarray(u * s)
    rng = np.random.default_rng(config.seed)

    c_state = np.zeros((j, rank))
    psi = 0.0
    best_w = None
    accepted: list[float] = []
    failures = {"objective": 0, "rank": 0, "bandwidth": 0, "nonuniformity": 0}
    rows = np.arange(n_bins)

    for k in range(1, config.max_iters + 1):
        beta = beta_schedule(k, config.beta_floor)
        c_k = c_state + beta * rng.laplace(0.0, 1.0, (j, rank))
        norms = np.sqrt(np.einsum("jr,jr->r", c_k, c_k))
        c_k /= np.where(norms > 0, norms, 1.0)
        q = z @ c_k
        rbar = np.argmax(q, axis=1)
        qbar = q[rows, rbar]
        positive = qbar > 0
        psi_k = float(np.sum(qbar[positive] ** 2))
        widths = np.bincount(rbar[positive], minlength=rank)

        ok = True
        if not psi_k > psi:
            failures["objective"] += 1
            ok = False
        if not np.count_nonzero(widths) > 1:
            failures["rank"] += 1
            ok = False
        if not np.all(widths > config.min_bandwidth_factor * n_bins):
            failures["bandwidth"] += 1
            ok = False
        if not widths.max() - widths.min() > widths.mean():
            failures["nonuniformity"] += 1
            ok = False
        if ok:
            psi = psi_k
            c_state = c_k
            best_w = _scatter_columns((n_bins, rank), rbar, qbar)
            accepted.append(psi_k)

    if best_w is None:
        raise NoAcceptedCandidateError(
            f"no accepted candidate in {config.max_iters} iterations "
            f"(gate failures: {failures})",
            gate_failures=failures,
        )
    h = y.T @ best_w
    objective = float(np.sum((z.T @ best_w) ** 2))
    return FactorModel(best_w, h, objective, rank, j, config.seed,
                       accepted_steps=len(accepted), gate_failures=failures,
                       accepted_objectives=tuple(accepted))


def nmf_mu(y: np.ndarray, rank: int, iters: int = 500, seed: int = 0,
           return_objective_history: bool = False):
    """Euclidean-distance NMF with multiplicative updates.

    Factors ``y ~ w @ h.T`` from strictly positive random initialization.
    After the iterations, columns of ``w`` are normalized to unit l2 norm
    with the scale pushed into ``h``.  With
    ``return_objective_history=True`` also returns the squared Frobenius
    reconstruction error after every iteration.
    """
    y = np.asarray(y, dtype=np.float64)
    n_rows, n_cols = y.shape
    if not 1 <= rank <= min(n_rows, n_cols):
        raise ValueError("rank out of range")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(max(y.mean(), np.finfo(float).tiny) / rank)
    w = scale * (0.01 + rng.random((n_rows, rank)))
    h = scale * (0.01 + rng.random((n_cols, rank)))

    eps = 1e-12
    history = np.empty(iters)
    for it in range(iters):
        w *= (y @ h) / np.maximum(w @ (h.T @ h), eps)
        h *= (y.T @ w) / np.maximum(h @ (w.T @ w), eps)
        if return_objective_history:
            diff = y - w @ h.T
            history[it] = float(np.sum(diff * diff))

    norms = np.linalg.norm(w, axis=0)
    nonzero = norms > 0
    w[:, nonzero] /= norms[nonzero]
    h[:, nonzero] *= norms[nonzero]
    diff = y - w @ h.T
    objective = float(np.sum(diff * diff))
    model = FactorModel(w, h, objective, rank, min(n_rows, n_cols), seed, accepted_steps=iters)
    if return_objective_history:
        return model, history
    return model


def orthogonality_defect(w: np.ndarray) -> float:
    """Frobenius distance of W^T W from the identity over nonempty columns."""
    w = np.asarray(w, dtype=np.float64)
    nonzero = np.linalg.norm(w, axis=0) > 0
    active = w[:, nonzero]
    if active.shape[1] == 0:
        return 0.0
    gram = active.T @ active
    return float(np.linalg.norm(gram - np.eye(active.shape[1])))


def save_factor_model(model: FactorModel, basepath) -> list[str]:
    """Write W and H as CSV plus a JSON sidecar with the provenance."""
    basepath = str(basepath)
    paths = []
    for name, matrix in (("w", model.w), ("h", model.h)):
        path = f"{basepath}_{name}.csv"
        with open(path, "w") as fh:
            for row in matrix:
                fh.write(",".join(_format_float(v) for v in row) + "\n")
        paths.append(path)
    sidecar = {
        "objective": model.objective,
        "rank": model.rank,
        "tsvd_rank": model.tsvd_rank,
        "seed": model.seed,
        "accepted_steps": model.accepted_steps,
        "gate_failures": model.gate_failures,
    }
    path = f"{basepath}.json"
    with open(path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(path)
    return paths
