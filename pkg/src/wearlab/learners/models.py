"""The six classifiers, their specs, and JSON round-tripping.

Each core model works on already-preprocessed dense arrays. ``fit`` and
``predict_proba`` wrap a core model with its fold-local ``Preprocessor``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from . import _kernels as K
from .preprocess import Preprocessor, preprocess_apply, preprocess_fit

FORMAT_VERSION = 1

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "rf": {"n_estimators": 200, "max_depth": None, "max_features": "sqrt", "bootstrap": True},
    "gb": {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1, "min_samples_leaf": 1},
    "lr": {"l2": 1.0, "tol": 1e-8, "max_iter": 100},
    "svm": {"C": 1.0, "gamma": "scale_1_over_d", "tol": 1e-3, "max_iter": 100000},
    "mlp": {"hidden": 32, "epochs": 200, "learning_rate": 1e-3, "batch_size": 32, "alpha": 1e-4},
    "knn": {"k": 5},
}
MODEL_KINDS = tuple(DEFAULTS)


def _check_positive_int(kind, key, v, allow_none=False):
    if v is None and allow_none:
        return
    if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
        raise ValueError(f"{kind}.{key} must be a positive integer, got {v!r}")


def _check_positive(kind, key, v):
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
        raise ValueError(f"{kind}.{key} must be positive, got {v!r}")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DEFAULTS:
            raise ValueError(f"unknown model kind {self.kind!r}; valid kinds: {', '.join(MODEL_KINDS)}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown {self.kind} hyperparameters: {sorted(unknown)}")
        merged = {**DEFAULTS[self.kind], **self.params}
        object.__setattr__(self, "params", merged)
        k = self.kind
        for key, v in merged.items():
            if key in ("n_estimators", "min_samples_leaf", "max_iter", "hidden", "epochs",
                       "batch_size", "k"):
                _check_positive_int(k, key, v)
            elif key == "max_depth":
                _check_positive_int(k, key, v, allow_none=(k == "rf"))
            elif key in ("learning_rate", "C", "tol"):
                _check_positive(k, key, v)
            elif key in ("l2", "alpha"):
                if not isinstance(v, (int, float)) or v < 0:
                    raise ValueError(f"{k}.{key} must be non-negative, got {v!r}")
            elif key == "max_features":
                if v not in ("sqrt", "all") and not (isinstance(v, int) and v >= 1):
                    raise ValueError(f"rf.max_features must be 'sqrt', 'all' or an integer, got {v!r}")
            elif key == "gamma":
                if v != "scale_1_over_d":
                    _check_positive(k, key, v)
            elif key == "bootstrap":
                if not isinstance(v, bool):
                    raise ValueError("rf.bootstrap must be a boolean")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(self.kind, dict(self.params), int(seed) % 2 ** 64)

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "seed": int(self.seed)}

    @classmethod
    def from_json(cls, doc: dict) -> "ModelSpec":
        return cls(doc["kind"], dict(doc.get("params", {})), int(doc.get("seed", 0)))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def _arr(a):
    return np.asarray(a).tolist()


# ---------------------------------------------------------------------------
# core models (dense, preprocessed input)
# ---------------------------------------------------------------------------

class _Constant:
    """Used when preprocessing leaves no usable features."""

    def __init__(self, p=0.5):
        self.p = float(p)

    def fit(self, Z, y, spec):
        self.p = float(np.mean(y))
        return self

    def proba(self, Z):
        return np.full(len(Z), self.p)

    def params(self):
        return {"p": self.p}

    @classmethod
    def load(cls, d):
        return cls(d["p"])


class GradientBoosting:
    def fit(self, Z, y, spec):
        p = spec.params
        self.init, self.feat, self.thr, self.val, self.leaf, self.losses = K.gb_fit(
            np.ascontiguousarray(Z, dtype=float), y.astype(np.float64), p["n_estimators"],
            p["max_depth"], float(p["learning_rate"]), p["min_samples_leaf"])
        return self

    def raw(self, Z):
        return K.gb_raw(np.ascontiguousarray(Z, dtype=float), self.init, self.feat, self.thr,
                        self.val, self.leaf)

    def proba(self, Z):
        return _sigmoid(self.raw(Z))

    def params(self):
        return {"init": self.init, "feature": _arr(self.feat), "threshold": _arr(self.thr),
                "value": _arr(self.val), "leaf": _arr(self.leaf.astype(int)),
                "train_loss": _arr(self.losses)}

    @classmethod
    def load(cls, d):
        m = cls()
        m.init = float(d["init"])
        m.feat = np.asarray(d["feature"], dtype=np.int64)
        m.thr = np.asarray(d["threshold"], dtype=float)
        m.val = np.asarray(d["value"], dtype=float)
        m.leaf = np.asarray(d["leaf"], dtype=bool)
        m.losses = np.asarray(d["train_loss"], dtype=float)
        return m


class RandomForest:
    def fit(self, Z, y, spec):
        p = spec.params
        d = Z.shape[1]
        mf = p["max_features"]
        if mf == "sqrt":
            mtry = max(1, int(math.isqrt(d)))
        elif mf == "all":
            mtry = d
        else:
            mtry = min(int(mf), d)
        depth = -1 if p["max_depth"] is None else p["max_depth"]
        out = K.rf_fit(np.ascontiguousarray(Z, dtype=float), y.astype(np.float64),
                       p["n_estimators"], mtry, depth, bool(p["bootstrap"]), np.uint64(spec.seed))
        self.feat, self.thr, self.left, self.right, self.value, self.sizes, self.importances = out
        return self

    def proba(self, Z):
        return K.rf_proba(np.ascontiguousarray(Z, dtype=float), self.feat, self.thr, self.left,
                          self.right, self.value)

    def params(self):
        trees = []
        for t, s in enumerate(self.sizes):
            trees.append({"feature": _arr(self.feat[t, :s]), "threshold": _arr(self.thr[t, :s]),
                          "left": _arr(self.left[t, :s]), "right": _arr(self.right[t, :s]),
                          "value": _arr(self.value[t, :s])})
        return {"trees": trees, "importances": _arr(self.importances)}

    @classmethod
    def load(cls, d):
        m = cls()
        trees = d["trees"]
        cap = max(len(t["feature"]) for t in trees)
        T = len(trees)
        m.feat = np.full((T, cap), -1, dtype=np.int64)
        m.thr = np.zeros((T, cap))
        m.left = np.zeros((T, cap), dtype=np.int64)
        m.right = np.zeros((T, cap), dtype=np.int64)
        m.value = np.zeros((T, cap))
        m.sizes = np.array([len(t["feature"]) for t in trees], dtype=np.int64)
        for i, t in enumerate(trees):
            s = m.sizes[i]
            m.feat[i, :s] = t["feature"]
            m.thr[i, :s] = t["threshold"]
            m.left[i, :s] = t["left"]
            m.right[i, :s] = t["right"]
            m.value[i, :s] = t["value"]
        m.importances = np.asarray(d["importances"], dtype=float)
        return m


class LogisticRegression:
    """L2-penalised logistic regression solved by Newton-Raphson (IRLS).

    Objective: sum of log-losses + l2/2 * ||w||^2; the intercept is not penalised.
    """

    def fit(self, Z, y, spec):
        p = spec.params
        n, d = Z.shape
        A = np.hstack([np.ones((n, 1)), Z])
        pen = np.full(d + 1, float(p["l2"]))
        pen[0] = 0.0
        beta = np.zeros(d + 1)
        yf = y.astype(float)
        for _ in range(p["max_iter"]):
            mu = _sigmoid(A @ beta)
            w = np.maximum(mu * (1 - mu), 1e-12)
            grad = A.T @ (mu - yf) + pen * beta
            H = (A * w[:, None]).T @ A + np.diag(pen + 1e-12)
            step = np.linalg.solve(H, grad)
            beta = beta - step
            if np.max(np.abs(step)) < p["tol"]:
                break
        self.beta = beta
        return self

    def proba(self, Z):
        return _sigmoid(self.beta[0] + Z @ self.beta[1:])

    def params(self):
        return {"intercept": float(self.beta[0]), "coef": _arr(self.beta[1:])}

    @classmethod
    def load(cls, d):
        m = cls()
        m.beta = np.concatenate([[d["intercept"]], d["coef"]]).astype(float)
        return m


def _rbf(A, B, gamma):
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _platt(f, y, max_iter=100):
    """Fit P(y=1|f) = 1/(1+exp(A f + B)) with Platt's smoothed targets."""
    n_pos = float(y.sum())
    n_neg = float(len(y) - n_pos)
    t = np.where(y == 1, (n_pos + 1) / (n_pos + 2), 1 / (n_neg + 2))
    A, B = 0.0, math.log((n_neg + 1) / (n_pos + 1))

    def obj(A, B):
        z = A * f + B
        return float(np.sum(np.logaddexp(0, z) - (1 - t) * z))

    cur = obj(A, B)
    for _ in range(max_iter):
        p = _sigmoid(-(A * f + B))
        d1 = t - p
        w = p * (1 - p)
        gA, gB = float(np.sum(f * d1)), float(np.sum(d1))
        h11 = float(np.sum(f * f * w)) + 1e-12
        h22 = float(np.sum(w)) + 1e-12
        h21 = float(np.sum(f * w))
        det = h11 * h22 - h21 * h21
        if abs(gA) < 1e-10 and abs(gB) < 1e-10:
            break
        dA = -(h22 * gA - h21 * gB) / det
        dB = -(-h21 * gA + h11 * gB) / det
        step = 1.0
        while step > 1e-10:
            nA, nB = A + step * dA, B + step * dB
            new = obj(nA, nB)
            if new < cur + 1e-4 * step * (gA * dA + gB * dB):
                A, B, cur = nA, nB, new
                break
            step /= 2
        else:
            break
    # keep the calibration increasing in the decision value
    return min(A, -1e-6), B


class SupportVectorMachine:
    def fit(self, Z, y, spec):
        p = spec.params
        d = Z.shape[1]
        self.gamma = 1.0 / d if p["gamma"] == "scale_1_over_d" else float(p["gamma"])
        ys = np.where(y == 1, 1.0, -1.0)
        Kmat = _rbf(Z, Z, self.gamma)
        alpha, b = K.smo_solve(Kmat, ys, float(p["C"]), float(p["tol"]), int(p["max_iter"]))
        sv = alpha > 0
        self.sv = Z[sv].copy()
        self.coef = (alpha * ys)[sv]
        self.b = float(b)
        f = Kmat[:, sv] @ self.coef + self.b
        self.A, self.B = _platt(f, y)
        return self

    def decision(self, Z):
        if len(self.coef) == 0:
            return np.full(len(Z), self.b)
        return _rbf(Z, self.sv, self.gamma) @ self.coef + self.b

    def proba(self, Z):
        return _sigmoid(-(self.A * self.decision(Z) + self.B))

    def params(self):
        return {"gamma": self.gamma, "support_vectors": _arr(self.sv), "dual_coef": _arr(self.coef),
                "intercept": self.b, "platt": [self.A, self.B]}

    @classmethod
    def load(cls, d):
        m = cls()
        m.gamma = float(d["gamma"])
        m.coef = np.asarray(d["dual_coef"], dtype=float)
        m.sv = np.asarray(d["support_vectors"], dtype=float).reshape(len(m.coef), -1)
        m.b = float(d["intercept"])
        m.A, m.B = d["platt"]
        return m


# ----- MLP ------------------------------------------------------------------

def mlp_forward(params, X):
    W1, b1, W2, b2 = params
    H = X @ W1 + b1
    A = np.maximum(H, 0.0)
    z = A @ W2 + b2
    return H, A, z


def mlp_loss_and_grad(params, X, y, alpha=0.0):
    """Mean binary cross-entropy (+ alpha/2 ||W||^2 / n) and its gradient."""
    W1, b1, W2, b2 = params
    n = len(y)
    H, A, z = mlp_forward(params, X)
    loss = float(np.mean(np.logaddexp(0, z) - y * z))
    loss += 0.5 * alpha * (np.sum(W1 * W1) + np.sum(W2 * W2)) / n
    dz = (_sigmoid(z) - y) / n
    gW2 = A.T @ dz + alpha * W2 / n
    gb2 = np.array(dz.sum())
    dA = np.outer(dz, W2)
    dH = dA * (H > 0)
    gW1 = X.T @ dH + alpha * W1 / n
    gb1 = dH.sum(axis=0)
    return loss, (gW1, gb1, gW2, gb2)


def mlp_init(d, hidden, rng):
    W1 = rng.normal(0.0, math.sqrt(2.0 / max(d, 1)), size=(d, hidden))
    W2 = rng.normal(0.0, math.sqrt(1.0 / hidden), size=hidden)
    return [W1, np.zeros(hidden), W2, np.array(0.0)]


class MultilayerPerceptron:
    """One ReLU hidden layer, logistic output, trained with Adam on minibatches."""

    def fit(self, Z, y, spec):
        p = spec.params
        rng = np.random.default_rng(spec.seed)
        n, d = Z.shape
        params = mlp_init(d, p["hidden"], rng)
        m = [np.zeros_like(w) for w in params]
        v = [np.zeros_like(w) for w in params]
        b1, b2, eps, lr = 0.9, 0.999, 1e-8, float(p["learning_rate"])
        yf = y.astype(float)
        t = 0
        bs = min(p["batch_size"], n)
        for _ in range(p["epochs"]):
            order = rng.permutation(n)
            for s in range(0, n, bs):
                idx = order[s:s + bs]
                _, grads = mlp_loss_and_grad(params, Z[idx], yf[idx], p["alpha"] * len(idx) / n)
                t += 1
                for k in range(4):
                    m[k] = b1 * m[k] + (1 - b1) * grads[k]
                    v[k] = b2 * v[k] + (1 - b2) * grads[k] ** 2
                    mh = m[k] / (1 - b1 ** t)
                    vh = v[k] / (1 - b2 ** t)
                    params[k] = params[k] - lr * mh / (np.sqrt(vh) + eps)
        self.W = params
        return self

    def proba(self, Z):
        return _sigmoid(mlp_forward(self.W, Z)[2])

    def params(self):
        return {"W1": _arr(self.W[0]), "b1": _arr(self.W[1]), "W2": _arr(self.W[2]),
                "b2": float(self.W[3])}

    @classmethod
    def load(cls, d):
        m = cls()
        b1 = np.asarray(d["b1"], dtype=float)
        m.W = [np.asarray(d["W1"], dtype=float).reshape(-1, len(b1)), b1,
               np.asarray(d["W2"], dtype=float), np.array(float(d["b2"]))]
        return m


class NearestNeighbors:
    def fit(self, Z, y, spec):
        self.X = np.array(Z, dtype=float)
        self.y = np.asarray(y, dtype=np.int64).copy()
        self.k = min(spec.params["k"], len(y))
        return self

    def proba(self, Z):
        d2 = ((Z[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        # stable sort: equal distances resolve by training row order
        nn = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return self.y[nn].mean(axis=1)

    def params(self):
        return {"k": self.k, "X": _arr(self.X), "y": _arr(self.y)}

    @classmethod
    def load(cls, d):
        m = cls()
        m.k = int(d["k"])
        m.y = np.asarray(d["y"], dtype=np.int64)
        m.X = np.asarray(d["X"], dtype=float).reshape(len(m.y), -1)
        return m


CORES = {"rf": RandomForest, "gb": GradientBoosting, "lr": LogisticRegression,
         "svm": SupportVectorMachine, "mlp": MultilayerPerceptron, "knn": NearestNeighbors}


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be a 1-D array of 0/1")
    if y.min() == y.max():
        raise ValueError("training set contains a single class")
    return y.astype(np.int64)


def fit_core(spec: ModelSpec, Z, y):
    """Fit on preprocessed rows; returns a core model with ``proba``."""
    y = _check_labels(y)
    Z = np.asarray(Z, dtype=float)
    if Z.shape[1] == 0:
        return _Constant().fit(Z, y, spec)
    return CORES[spec.kind]().fit(Z, y, spec)


@dataclass
class TrainedModel:
    spec: ModelSpec
    preprocessor: Preprocessor
    core: Any

    def to_json(self) -> dict:
        kind = "constant" if isinstance(self.core, _Constant) else self.spec.kind
        return {"format_version": FORMAT_VERSION, "spec": self.spec.to_json(),
                "preprocessor": self.preprocessor.to_json(), "core_kind": kind,
                "parameters": self.core.params()}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc: dict) -> "TrainedModel":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {doc.get('format_version')!r}")
        core_cls = _Constant if doc["core_kind"] == "constant" else CORES[doc["core_kind"]]
        return cls(ModelSpec.from_json(doc["spec"]), Preprocessor.from_json(doc["preprocessor"]),
                   core_cls.load(doc["parameters"]))


def fit(spec: ModelSpec, X, y, feature_ids=None) -> TrainedModel:
    """Fit preprocessing and the model on training rows (NaN = missing)."""
    y = _check_labels(y)
    pre = preprocess_fit(X, feature_ids)
    return TrainedModel(spec, pre, fit_core(spec, preprocess_apply(pre, X), y))


def predict_proba(model: TrainedModel, rows) -> np.ndarray:
    """Probability of the ``lost_ge_2pct`` class for each row (or a scalar for one row)."""
    X = np.asarray(rows, dtype=float)
    single = X.ndim == 1
    Z = preprocess_apply(model.preprocessor, np.atleast_2d(X))
    p = np.clip(model.core.proba(Z), 0.0, 1.0)
    return float(p[0]) if single else p
