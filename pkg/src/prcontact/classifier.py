"""Feedforward classifiers for contact type and clamping chain.

Plain numpy: tanh hidden layers, softmax head, cross-entropy with an L2
penalty on the weights, Adam updates. Inputs are standardised with training
statistics stored in the model.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyDataset, EmptyGrid, NonFiniteLoss, UntrainedModel

FORMAT_TAG = "prcontact-fnn"
FORMAT_VERSION = 1

COLLISION, CLAMPING = 0, 1
CONTACT_CLASSES = ("collision", "clamping")


@dataclass
class FnnModel:
    layer_sizes: list
    weights: list
    biases: list
    l2: float = 0.0
    classes: list = None
    mean: np.ndarray = None
    std: np.ndarray = None
    trained: bool = False

    def __post_init__(self):
        if self.l2 < 0:
            raise ValueError("L2 coefficient must be non-negative")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.layer_sizes[k], self.layer_sizes[k + 1]) or b.shape != (self.layer_sizes[k + 1],):
                raise DimensionMismatch(f"layer {k} has shape {W.shape}, expected "
                                        f"({self.layer_sizes[k]}, {self.layer_sizes[k + 1]})")
        if self.classes is None:
            self.classes = list(range(self.layer_sizes[-1]))
        n_in = self.layer_sizes[0]
        self.mean = np.zeros(n_in) if self.mean is None else np.asarray(self.mean, dtype=float)
        self.std = np.ones(n_in) if self.std is None else np.asarray(self.std, dtype=float)

    @classmethod
    def init(cls, n_in, hidden, n_out, l2=0.0, seed=0, classes=None):
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        sizes = [n_in, *hidden, n_out]
        Ws, bs = [], []
        for a, b in zip(sizes[:-1], sizes[1:]):
            lim = np.sqrt(6.0 / (a + b))
            Ws.append(rng.uniform(-lim, lim, size=(a, b)))
            bs.append(np.zeros(b))
        return cls(sizes, Ws, bs, l2, classes)

    @property
    def n_params(self):
        return int(sum(W.size + b.size for W, b in zip(self.weights, self.biases)))

    @property
    def hidden(self):
        return list(self.layer_sizes[1:-1])

    def copy(self):
        return FnnModel(list(self.layer_sizes), [W.copy() for W in self.weights], [b.copy() for b in self.biases],
                        self.l2, list(self.classes), self.mean.copy(), self.std.copy(), self.trained)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward(model, X):
    acts = [X]
    h = X
    n = len(model.weights)
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W + b
        h = np.tanh(z) if k < n - 1 else _softmax(z)
        acts.append(h)
    return acts


def fnn_forward(model, features):
    """Class probabilities for one feature vector or a batch (rows)."""
    X = np.asarray(features, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.layer_sizes[0]:
        raise DimensionMismatch(f"expected {model.layer_sizes[0]} features, got {X.shape[1]}")
    P = _forward(model, (X - model.mean) / model.std)[-1]
    return P[0] if single else P


def loss_and_grads(model, Xs, y):
    """Mean cross-entropy + l2 * sum(W^2) and its gradients, on standardised inputs."""
    acts = _forward(model, Xs)
    P = acts[-1]
    n = len(y)
    ce = -np.mean(np.log(np.clip(P[np.arange(n), y], 1e-300, None)))
    loss = ce + model.l2 * sum(float(np.sum(W * W)) for W in model.weights)
    delta = P.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    gW, gb = [], []
    for k in range(len(model.weights) - 1, -1, -1):
        gW.append(acts[k].T @ delta + 2.0 * model.l2 * model.weights[k])
        gb.append(delta.sum(axis=0))
        if k > 0:
            delta = (delta @ model.weights[k].T) * (1.0 - acts[k] ** 2)
    return loss, gW[::-1], gb[::-1]


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch: int = 256
    epochs: int = 50
    l2: float | None = None
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def _class_index(model, labels):
    lookup = {c: i for i, c in enumerate(model.classes)}
    try:
        return np.array([lookup[v] for v in np.asarray(labels).tolist()], dtype=int)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not among model classes {model.classes}") from None


def train(model, X, y, config=None):
    """Adam on mini-batches; returns ``(trained_model, epoch_loss_history)``.

    ``y`` holds labels from ``model.classes``. Standardisation statistics are
    taken from ``X``.
    """
    cfg = config or TrainConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise EmptyDataset("training set is empty")
    if X.shape[1] != model.layer_sizes[0]:
        raise DimensionMismatch(f"expected {model.layer_sizes[0]} features, got {X.shape[1]}")
    m = model.copy()
    if cfg.l2 is not None:
        m.l2 = cfg.l2
    yi = _class_index(m, y)
    m.mean = X.mean(axis=0)
    m.std = X.std(axis=0)
    m.std[m.std < 1e-12] = 1.0
    Xs = (X - m.mean) / m.std
    rng = np.random.default_rng(cfg.seed)
    params = m.weights + m.biases
    mom = [np.zeros_like(p) for p in params]
    vel = [np.zeros_like(p) for p in params]
    step = 0
    history = []
    n = len(Xs)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch):
            idx = order[s:s + cfg.batch]
            loss, gW, gb = loss_and_grads(m, Xs[idx], yi[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss("training diverged")
            total += loss * len(idx)
            step += 1
            c1 = 1.0 - cfg.beta1 ** step
            c2 = 1.0 - cfg.beta2 ** step
            for p, g, mo, ve in zip(params, gW + gb, mom, vel):
                mo *= cfg.beta1
                mo += (1.0 - cfg.beta1) * g
                ve *= cfg.beta2
                ve += (1.0 - cfg.beta2) * g * g
                p -= cfg.lr * (mo / c1) / (np.sqrt(ve / c2) + cfg.eps)
        history.append(total / n)
    m.trained = True
    return m, history


def predict(model, X):
    P = fnn_forward(model, X)
    idx = np.argmax(np.atleast_2d(P), axis=1)
    return np.asarray(model.classes)[idx]


def accuracy(model, X, y):
    return float(np.mean(predict(model, X) == np.asarray(y)))


def confusion_matrix(y_true, y_pred, classes, normalize=True):
    """Rows: true class, columns: predicted class; rows sum to 1 when normalised."""
    lookup = {c: i for i, c in enumerate(classes)}
    C = np.zeros((len(classes), len(classes)))
    for t, p in zip(np.asarray(y_true).tolist(), np.asarray(y_pred).tolist()):
        C[lookup[t], lookup[p]] += 1
    if normalize:
        rows = C.sum(axis=1, keepdims=True)
        C = np.divide(C, rows, out=np.zeros_like(C), where=rows > 0)
    return C


def balance(X, y, seed=0):
    """Undersample every class to the size of the rarest one."""
    X, y = np.asarray(X), np.asarray(y)
    rng = np.random.default_rng(seed)
    labels, counts = np.unique(y, return_counts=True)
    n = counts.min()
    keep = np.concatenate([rng.choice(np.flatnonzero(y == c), n, replace=False) for c in labels])
    keep.sort()
    return X[keep], y[keep]


@dataclass
class GridResult:
    model: FnnModel
    report: list = field(default_factory=list)


DEFAULT_GRID = {"layers": [2, 3, 5], "neurons": [10, 25, 30], "l2": [0.0, 1e-4, 1e-3]}


def grid_search(X_train, y_train, X_val, y_val, grid=None, classes=None, config=None):
    """Exhaustive search over hidden-layer count, width and L2 coefficient.

    Selection by validation accuracy; ties go to the smaller network. Report
    rows follow grid order.
    """
    grid = grid or DEFAULT_GRID
    combos = list(itertools.product(grid["layers"], grid["neurons"], grid["l2"]))
    if not combos:
        raise EmptyGrid("hyperparameter grid is empty")
    cfg = config or TrainConfig()
    classes = list(classes) if classes is not None else sorted(np.unique(y_train).tolist())
    X_train = np.asarray(X_train, dtype=float)
    best, best_key = None, None
    report = []
    for n_layers, width, lam in combos:
        init = FnnModel.init(X_train.shape[1], [width] * n_layers, len(classes), lam, cfg.seed, classes)
        model, hist = train(init, X_train, y_train, TrainConfig(**{**cfg.__dict__, "l2": lam}))
        acc = accuracy(model, X_val, y_val)
        report.append({"layers": n_layers, "neurons": width, "l2": lam, "val_accuracy": acc,
                       "n_params": model.n_params, "final_loss": hist[-1]})
        key = (-acc, model.n_params)
        if best_key is None or key < best_key:
            best, best_key = model, key
    return GridResult(best, report)


def classify_contact(model, F_hat):
    """'collision' or 'clamping' from the estimated wrench."""
    if not model.trained:
        raise UntrainedModel("contact classifier has not been trained")
    return CONTACT_CLASSES[int(predict(model, np.asarray(F_hat, dtype=float))[0])]


def classify_chain(model, F_hat, d):
    """Clamped chain (1..3) from the wrench and the coupling-joint distances."""
    if not model.trained:
        raise UntrainedModel("chain classifier has not been trained")
    x = np.concatenate([np.asarray(F_hat, dtype=float), np.asarray(d, dtype=float)])
    return int(predict(model, x)[0])


# ---------------------------------------------------------------------------
# persistence


def _fmt(a):
    return " ".join(repr(float(v)) for v in np.asarray(a).ravel())


def save_model(model, path):
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        "layers " + " ".join(str(n) for n in model.layer_sizes),
        "activation tanh softmax",
        f"l2 {model.l2!r}",
        "classes " + " ".join(str(c) for c in model.classes),
        f"trained {int(model.trained)}",
        "mean " + _fmt(model.mean),
        "std " + _fmt(model.std),
    ]
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"W {k} {W.shape[0]} {W.shape[1]}")
        lines.extend(_fmt(row) for row in W)
        lines.append(f"b {k} {b.shape[0]}")
        lines.append(_fmt(b))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    tag, version = lines[0].split()
    if tag != FORMAT_TAG or int(version) != FORMAT_VERSION:
        raise ValueError(f"{path}: not a {FORMAT_TAG} v{FORMAT_VERSION} file")
    head = {}
    i = 1
    while not lines[i].startswith("W "):
        key, _, rest = lines[i].partition(" ")
        head[key] = rest
        i += 1
    sizes = [int(v) for v in head["layers"].split()]
    Ws, bs = [], []
    while i < len(lines):
        _, k, r, c = lines[i].split()
        r, c = int(r), int(c)
        Ws.append(np.array([[float(v) for v in lines[i + 1 + j].split()] for j in range(r)]).reshape(r, c))
        i += 1 + r
        _, _, nb = lines[i].split()
        bs.append(np.array([float(v) for v in lines[i + 1].split()]).reshape(int(nb)))
        i += 2
    classes = [int(v) if v.lstrip("-").isdigit() else v for v in head["classes"].split()]
    return FnnModel(sizes, Ws, bs, float(head["l2"]), classes,
                    np.array([float(v) for v in head["mean"].split()]),
                    np.array([float(v) for v in head["std"].split()]),
                    bool(int(head.get("trained", "1"))))
