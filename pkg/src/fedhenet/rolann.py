"""Closed-form one-layer classifier with exact federated aggregation.

Each client summarizes its local data as a per-class triple (U, S, M):
the thin SVD of the derivative-weighted design matrix plus the weighted
feature/target correlation vector M.  Triples from any partition of the
data can be folded associatively and yield the same global weights as a
centralized fit, which is what makes the single-round protocol exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InputError, NumericError

RANK_TRUNCATION_REL = 1e-12
SINGULAR_GUARD = 1e-10


class ActivationKind(Enum):
    IDENTITY = "identity"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class HyperParams:
    lam: float = 0.01
    epsilon: float = 0.05
    activation: ActivationKind = ActivationKind.IDENTITY
    include_bias: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise InputError(f"lambda must be >= 0, got {self.lam}")
        if not (0.0 <= self.epsilon < 0.5):
            raise InputError(f"epsilon must lie in [0, 0.5), got {self.epsilon}")
        if self.activation is ActivationKind.LOGISTIC and self.epsilon == 0.0:
            raise InputError("logistic activation requires epsilon > 0 (finite logits)")


@dataclass
class EmbeddingDataset:
    """Sample-by-feature embedding matrix with integer class labels."""

    data: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise InputError(f"data must be a non-empty 2-D matrix, got shape {self.data.shape}")
        if self.labels.shape != (self.data.shape[0],):
            raise InputError("labels must be one entry per sample")
        if not np.all(np.isfinite(self.data)):
            raise NumericError("dataset contains non-finite values")
        if self.n_classes < 1 or self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise InputError("labels must lie in [0, n_classes)")

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]

    def subset(self, indices) -> "EmbeddingDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return EmbeddingDataset(self.data[idx], self.labels[idx], self.n_classes)


@dataclass
class ClassUpdate:
    U: np.ndarray  # d x r, orthonormal columns
    S: np.ndarray  # length r, descending
    M: object  # plaintext vector (ndarray, length d) or a ciphertext handle


@dataclass
class ClientUpdate:
    client_id: int
    sample_count: int
    per_class: list
    shared_basis: bool = False  # identity activation: all classes share (U, S)


@dataclass
class AggregatedState:
    per_class: list
    shared_basis: bool = False


@dataclass
class GlobalModel:
    W: np.ndarray  # d x C
    activation: ActivationKind = ActivationKind.IDENTITY
    include_bias: bool = True


@dataclass
class EncryptedModel:
    """Per-class encrypted weight columns; decrypted client-side by a key holder."""

    columns: list
    d: int
    activation: ActivationKind
    include_bias: bool


def encode_targets(labels, n_classes: int, eps: float) -> np.ndarray:
    """One-vs-all target matrix: 1 - eps at the true class, eps elsewhere."""
    labels = np.asarray(labels, dtype=np.int64)
    if not (0.0 <= eps < 0.5):
        raise InputError(f"eps must lie in [0, 0.5), got {eps}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InputError("label out of range")
    T = np.full((labels.shape[0], n_classes), eps, dtype=np.float64)
    T[np.arange(labels.shape[0]), labels] = 1.0 - eps
    return T


def preactivation_targets(T: np.ndarray, activation: ActivationKind) -> np.ndarray:
    """Map desired outputs through the inverse activation (logit for logistic)."""
    T = np.asarray(T, dtype=np.float64)
    if activation is ActivationKind.IDENTITY:
        return T
    if np.any(T <= 0.0) or np.any(T >= 1.0):
        raise NumericError("logistic pre-activation targets require entries strictly in (0, 1)")
    return np.log(T / (1.0 - T))


def activation_derivative(Dbar: np.ndarray, activation: ActivationKind) -> np.ndarray:
    Dbar = np.asarray(Dbar, dtype=np.float64)
    if activation is ActivationKind.IDENTITY:
        return np.ones_like(Dbar)
    sig = 1.0 / (1.0 + np.exp(-Dbar))
    return sig * (1.0 - sig)


def _design_matrix(ds: EmbeddingDataset, include_bias: bool) -> np.ndarray:
    """Feature-by-sample design matrix, bias row of ones appended when requested."""
    x = ds.data.T
    if include_bias:
        x = np.vstack([x, np.ones((1, ds.n_samples))])
    return x


def _augment(X: np.ndarray, include_bias: bool) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InputError("X must be 2-D")
    if include_bias:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    return X


def _thin_svd(D: np.ndarray):
    try:
        U, S, _ = np.linalg.svd(D, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed: {exc}") from exc
    return U, S


def compute_client_update(
    ds: EmbeddingDataset, hp: HyperParams, encryptor=None, client_id: int = 0
) -> ClientUpdate:
    """Summarize one client's data as per-class (U, S, M) statistics.

    M is the only payload carrying raw statistical dependence on the
    samples; when an encryption context is supplied it leaves this
    function already encrypted.
    """
    x = _design_matrix(ds, hp.include_bias)
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite design matrix")
    C = ds.n_classes
    eps = hp.epsilon if hp.activation is ActivationKind.LOGISTIC else 0.0
    T = encode_targets(ds.labels, C, eps)
    Dbar = preactivation_targets(T, hp.activation)
    Fp = activation_derivative(Dbar, hp.activation)

    per_class = []
    if hp.activation is ActivationKind.IDENTITY:
        # f' == 1 for every class, so one SVD of the raw design serves all of them.
        U, S = _thin_svd(x)
        for c in range(C):
            M = x @ Dbar[:, c]
            if encryptor is not None:
                M = encryptor.encrypt(M)
            per_class.append(ClassUpdate(U=U, S=S, M=M))
        shared = True
    else:
        for c in range(C):
            fp = Fp[:, c]
            U, S = _thin_svd(x * fp[np.newaxis, :])
            M = x @ (fp * fp * Dbar[:, c])
            if encryptor is not None:
                M = encryptor.encrypt(M)
            per_class.append(ClassUpdate(U=U, S=S, M=M))
        shared = False
    return ClientUpdate(
        client_id=client_id, sample_count=ds.n_samples, per_class=per_class, shared_basis=shared
    )


def _truncate(U: np.ndarray, S: np.ndarray):
    if S.size == 0:
        return U, S
    keep = S > RANK_TRUNCATION_REL * S[0]
    return U[:, keep], S[keep]


def _is_plain(M) -> bool:
    return isinstance(M, np.ndarray)


def aggregate(updates) -> AggregatedState:
    """Fold client updates (or prior aggregates) into one global state.

    Per class the weighted bases are concatenated and re-factorized; the M
    vectors are summed (homomorphically when they arrive encrypted).  The
    fold is associative, so hierarchical or incremental aggregation gives
    the same result.
    """
    updates = list(updates)
    if not updates:
        raise InputError("aggregate requires at least one update")
    C = len(updates[0].per_class)
    d = updates[0].per_class[0].U.shape[0]
    plain = _is_plain(updates[0].per_class[0].M)
    for u in updates:
        if len(u.per_class) != C:
            raise InputError("class count mismatch between updates")
        for cu in u.per_class:
            if cu.U.shape[0] != d:
                raise InputError("feature dimension mismatch between updates")
            if _is_plain(cu.M) != plain:
                raise InputError("cannot mix plaintext and ciphertext M vectors")

    shared = all(getattr(u, "shared_basis", False) for u in updates)
    per_class = []
    shared_US = None
    for c in range(C):
        if shared and shared_US is not None:
            U, S = shared_US
        else:
            blocks = []
            for u in updates:
                Uu, Su = _truncate(u.per_class[c].U, u.per_class[c].S)
                blocks.append(Uu * Su[np.newaxis, :])
            U, S = _thin_svd(np.hstack(blocks))
            U, S = _truncate(U, S)
            if shared:
                shared_US = (U, S)
        M = updates[0].per_class[c].M
        for u in updates[1:]:
            M = M + u.per_class[c].M
        per_class.append(ClassUpdate(U=U, S=S, M=M))
    return AggregatedState(per_class=per_class, shared_basis=shared)


def solve_weights(
    agg: AggregatedState,
    lam: float,
    evaluator=None,
    activation: ActivationKind = ActivationKind.IDENTITY,
    include_bias: bool = True,
):
    """Global weights from the aggregated state: W_c = U (S^2 + lam I)^-1 U^T M_c.

    M in range(U) holds by construction, so the thin-SVD projector is exact.
    With encrypted M the d x d solve matrix is applied homomorphically and an
    EncryptedModel is returned instead.
    """
    if lam < 0:
        raise InputError("lambda must be >= 0")
    d = agg.per_class[0].U.shape[0]
    encrypted = not _is_plain(agg.per_class[0].M)
    if encrypted and evaluator is None:
        raise InputError("encrypted aggregate requires an evaluator context")

    columns = []
    for cu in agg.per_class:
        U, S = _truncate(cu.U, cu.S)
        if lam == 0.0 and (S.size < d or S.min() <= SINGULAR_GUARD):
            raise NumericError(
                "singular system: lambda=0 with rank-deficient aggregate "
                f"(rank {S.size} of {d}, smallest singular value "
                f"{S.min() if S.size else 0.0:.3e})"
            )
        core = 1.0 / (S * S + lam)
        if encrypted:
            A = (U * core[np.newaxis, :]) @ U.T
            columns.append(evaluator.matvec(A, cu.M))
        else:
            columns.append(U @ (core * (U.T @ cu.M)))

    if encrypted:
        return EncryptedModel(columns=columns, d=d, activation=activation, include_bias=include_bias)
    W = np.column_stack(columns)
    if not np.all(np.isfinite(W)):
        raise NumericError("non-finite weights")
    return GlobalModel(W=W, activation=activation, include_bias=include_bias)


def decrypt_model(enc: EncryptedModel, ctx) -> GlobalModel:
    cols = [np.asarray(ctx.decrypt(ct))[: enc.d] for ct in enc.columns]
    return GlobalModel(
        W=np.column_stack(cols), activation=enc.activation, include_bias=enc.include_bias
    )


def scores(model: GlobalModel, X: np.ndarray) -> np.ndarray:
    Xa = _augment(X, model.include_bias)
    if Xa.shape[1] != model.W.shape[0]:
        raise InputError(
            f"feature dimension {Xa.shape[1]} does not match model dimension {model.W.shape[0]}"
        )
    return Xa @ model.W


def predict(model: GlobalModel, X: np.ndarray) -> np.ndarray:
    """Argmax class per sample; the activation is monotone so pre-activation
    scores decide.  Ties break to the lowest class index."""
    return np.argmax(scores(model, X), axis=1)


def centralized_fit(ds: EmbeddingDataset, hp: HyperParams) -> GlobalModel:
    upd = compute_client_update(ds, hp)
    return solve_weights(
        aggregate([upd]), hp.lam, activation=hp.activation, include_bias=hp.include_bias
    )


def centralized_fit_dense(ds: EmbeddingDataset, hp: HyperParams) -> GlobalModel:
    """Independent oracle: solve (D D^T + lam I) w = M with a dense linear solve."""
    x = _design_matrix(ds, hp.include_bias)
    C = ds.n_classes
    eps = hp.epsilon if hp.activation is ActivationKind.LOGISTIC else 0.0
    T = encode_targets(ds.labels, C, eps)
    Dbar = preactivation_targets(T, hp.activation)
    Fp = activation_derivative(Dbar, hp.activation)
    d = x.shape[0]
    cols = []
    for c in range(C):
        fp = Fp[:, c]
        D = x * fp[np.newaxis, :]
        G = D @ D.T + hp.lam * np.eye(d)
        M = x @ (fp * fp * Dbar[:, c])
        try:
            cols.append(np.linalg.solve(G, M))
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"dense solve failed: {exc}") from exc
    return GlobalModel(
        W=np.column_stack(cols), activation=hp.activation, include_bias=hp.include_bias
    )
