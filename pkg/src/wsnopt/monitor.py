"""Hybrid event monitoring.

A three-hidden-layer deep belief network (Gaussian-Bernoulli input layer,
Bernoulli upper layers) is pretrained greedily with contrastive divergence,
fine-tuned through a logistic read-out, and its top-layer features feed an
incremental clustering-feature tree that makes the event decision.  An
additive topic sampler can augment features; readings flagged reactive
bypass the network entirely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class TrainingDivergenceError(RuntimeError):
    """A parameter update went non-finite."""


class NotReadyError(RuntimeError):
    """Inference requested before training."""


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


# ------------------------------------------------------------------- RBM


@dataclass
class RbmLayerParams:
    """One restricted Boltzmann machine layer.

    W is visible x hidden; sigma2 holds per-visible variances (ignored by
    Bernoulli-visible layers, kept at 1).
    """

    W: np.ndarray
    a: np.ndarray
    b: np.ndarray
    sigma2: np.ndarray
    bernoulli_visible: bool = False

    def __post_init__(self):
        d, f = self.W.shape
        if self.a.shape != (f,) or self.b.shape != (d,) or self.sigma2.shape != (d,):
            raise ValueError("parameter dimensions inconsistent")
        if np.any(self.sigma2 <= 0):
            raise ValueError("sigma2 entries must be positive")
        for arr in (self.W, self.a, self.b, self.sigma2):
            if not np.all(np.isfinite(arr)):
                raise ValueError("parameters must be finite")

    @property
    def sigma(self):
        return np.sqrt(self.sigma2)


def init_layer(d: int, f: int, rng: np.random.Generator,
               bernoulli_visible: bool = False) -> RbmLayerParams:
    """Small random weights, zero biases, unit variances."""
    return RbmLayerParams(0.01 * rng.standard_normal((d, f)), np.zeros(f),
                          np.zeros(d), np.ones(d), bernoulli_visible)


def rbm_energy(v: np.ndarray, h: np.ndarray, params: RbmLayerParams) -> float:
    """Joint energy of a visible/hidden configuration."""
    quad = np.sum((v - params.b) ** 2 / (2.0 * params.sigma2))
    inter = np.sum(params.W * np.outer(v / params.sigma, h))
    return float(quad - inter - np.dot(params.a, h))


def p_h_given_v(v: np.ndarray, params: RbmLayerParams) -> np.ndarray:
    """Hidden activation probabilities, the exact conditional of the joint
    energy.  Accepts a single vector or a batch (rows)."""
    scaled = v / params.sigma if not params.bernoulli_visible else v
    return sigmoid(params.a + scaled @ params.W)


def sample_h_given_v(v, params, rng):
    p = p_h_given_v(v, params)
    return (rng.random(p.shape) < p).astype(np.float64)


def sample_v_given_h(h: np.ndarray, params: RbmLayerParams,
                     rng: np.random.Generator) -> np.ndarray:
    """Visible sample: Gaussian around the shifted mean, or Bernoulli for
    upper layers."""
    if params.bernoulli_visible:
        p = sigmoid(params.b + h @ params.W.T)
        return (rng.random(p.shape) < p).astype(np.float64)
    mean = params.b + params.sigma * (h @ params.W.T)
    return mean + params.sigma * rng.standard_normal(mean.shape)


def gibbs_chain(v0: np.ndarray, params: RbmLayerParams, t_steps: int,
                rng: np.random.Generator):
    """T alternations of h ~ p(h|v) then v ~ p(v|h), from the data."""
    if t_steps < 1:
        raise ValueError("t_steps must be at least 1")
    v = v0
    h = None
    for _ in range(t_steps):
        h = sample_h_given_v(v, params, rng)
        v = sample_v_given_h(h, params, rng)
    return v, h


# ---------------------------------------------------- exact test oracles


def _enumerate_hidden(f: int):
    states = np.zeros((2 ** f, f))
    for s in range(2 ** f):
        for j in range(f):
            states[s, j] = (s >> j) & 1
    return states


def hidden_log_weights(params: RbmLayerParams) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized log p(h) for every hidden state, visible units
    integrated out analytically (Gaussian visible only)."""
    if params.bernoulli_visible:
        raise ValueError("gaussian-visible layers only")
    f = params.W.shape[1]
    if f > 12:
        raise ValueError("too many hidden units for enumeration")
    states = _enumerate_hidden(f)
    means = params.b + params.sigma * (states @ params.W.T)
    logw = states @ params.a + np.sum(
        (means ** 2 - params.b ** 2) / (2.0 * params.sigma2), axis=1)
    return states, logw


def exact_log_likelihood(batch: np.ndarray, params: RbmLayerParams) -> float:
    """Mean exact log p(v) over the batch; enumeration plus the Gaussian
    normalizer.  Test-only."""
    states, logw = hidden_log_weights(params)
    log_z = (np.log(np.sum(np.exp(logw - logw.max()))) + logw.max()
             + 0.5 * np.sum(np.log(2.0 * np.pi * params.sigma2)))
    total = 0.0
    for v in np.atleast_2d(batch):
        quad = -np.sum((v - params.b) ** 2 / (2.0 * params.sigma2))
        act = params.a + (v / params.sigma) @ params.W
        total += quad + np.sum(np.logaddexp(0.0, act)) - log_z
    return total / len(np.atleast_2d(batch))


def log_likelihood_grad(batch: np.ndarray, params: RbmLayerParams) -> np.ndarray:
    """Exact gradient of mean log-likelihood w.r.t. W: data statistics
    minus enumerated model statistics.  Test-only; refuses large layers."""
    batch = np.atleast_2d(batch)
    probs = p_h_given_v(batch, params)
    pos = (batch / params.sigma).T @ probs / len(batch)
    states, logw = hidden_log_weights(params)
    p_h = np.exp(logw - logw.max())
    p_h /= p_h.sum()
    means = params.b + params.sigma * (states @ params.W.T)
    neg = ((means / params.sigma).T * p_h) @ states
    return pos - neg


# ------------------------------------------------------------------ CD


@dataclass
class CdConfig:
    lr: float = 0.05
    t_steps: int = 1
    batch: int = 32
    epochs: int = 20

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if self.t_steps < 1:
            raise ValueError("t_steps must be at least 1")


def cd_statistics(batch: np.ndarray, v_chain: np.ndarray,
                  params: RbmLayerParams):
    """Positive and negative sufficient statistics of a CD step.

    Both sides use mean hidden activations; when the chain reconstruction
    equals the data the two sides are identical floats.
    """
    h_data = p_h_given_v(batch, params)
    h_chain = p_h_given_v(v_chain, params)
    scale = 1.0 if params.bernoulli_visible else params.sigma
    pos_w = (batch / scale).T @ h_data
    neg_w = (v_chain / scale).T @ h_chain
    n = len(batch)
    return ((pos_w - neg_w) / n,
            (h_data.sum(axis=0) - h_chain.sum(axis=0)) / n,
            ((batch - v_chain) / params.sigma2).sum(axis=0) / n)


def cd_update(batch: np.ndarray, params: RbmLayerParams, cfg: CdConfig,
              rng: np.random.Generator) -> RbmLayerParams:
    """One contrastive-divergence parameter step on a mini-batch."""
    batch = np.atleast_2d(batch)
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    v_chain, _ = gibbs_chain(batch, params, cfg.t_steps, rng)
    dw, da, db = cd_statistics(batch, v_chain, params)
    updated = (params.W + cfg.lr * dw, params.a + cfg.lr * da,
               params.b + cfg.lr * db)
    for arr in updated:
        if not np.all(np.isfinite(arr)):
            raise TrainingDivergenceError(
                f"non-finite update (lr={cfg.lr}, t={cfg.t_steps})")
    return RbmLayerParams(*updated, params.sigma2.copy(),
                          params.bernoulli_visible)


def reconstruction_error(data: np.ndarray, params: RbmLayerParams) -> float:
    """Mean squared error of the deterministic one-step reconstruction."""
    h = p_h_given_v(data, params)
    if params.bernoulli_visible:
        recon = sigmoid(params.b + h @ params.W.T)
    else:
        recon = params.b + params.sigma * (h @ params.W.T)
    return float(np.mean((data - recon) ** 2))


def train_rbm(data: np.ndarray, params: RbmLayerParams, cfg: CdConfig,
              rng: np.random.Generator):
    """Minibatch CD epochs; returns trained params and per-epoch mean
    reconstruction error."""
    curve = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(data))
        for lo in range(0, len(data), cfg.batch):
            idx = order[lo:lo + cfg.batch]
            params = cd_update(data[idx], params, cfg, rng)
        curve.append(reconstruction_error(data, params))
    return params, curve


# ------------------------------------------------------------------ DBN


@dataclass
class DbnStack:
    """Greedily pretrained stack: one Gaussian input layer, Bernoulli
    layers above, optional supervised read-out."""

    layers: list[RbmLayerParams]
    layer_sizes: tuple[int, ...]
    input_mean: np.ndarray
    input_std: np.ndarray
    readout_w: np.ndarray | None = None
    readout_b: float = 0.0

    @property
    def trained(self) -> bool:
        return len(self.layers) == 3

    def hidden_sizes(self) -> tuple[int, ...]:
        return self.layer_sizes[1:]


def standardize(data: np.ndarray):
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    std[std == 0] = 1.0
    return (data - mean) / std, mean, std


def forward(stack: DbnStack, data: np.ndarray) -> np.ndarray:
    """Deterministic mean activations of the top hidden layer."""
    if not stack.trained:
        raise NotReadyError("stack has no trained layers")
    x = (np.atleast_2d(data) - stack.input_mean) / stack.input_std
    for layer in stack.layers:
        x = p_h_given_v(x, layer)
    return x


def train_dbn(data: np.ndarray, layer_sizes: tuple[int, ...], cfg: CdConfig,
              rng: np.random.Generator) -> DbnStack:
    """Greedy layerwise pretraining on standardized inputs."""
    data = np.atleast_2d(data)
    if len(data) < 2:
        raise ValueError("need at least 2 training items")
    if len(layer_sizes) != 4:
        raise ValueError("layer_sizes must be input plus 3 hidden sizes")
    if layer_sizes[0] != data.shape[1]:
        raise ValueError("input size mismatch")
    x, mean, std = standardize(data)
    layers = []
    for k in range(3):
        params = init_layer(layer_sizes[k], layer_sizes[k + 1], rng,
                            bernoulli_visible=(k > 0))
        params, _ = train_rbm(x, params, cfg, rng)
        layers.append(params)
        x = p_h_given_v(x, params)
    return DbnStack(layers, tuple(layer_sizes), mean, std)


def fine_tune(stack: DbnStack, data: np.ndarray, labels: np.ndarray,
              lr: float, epochs: int) -> DbnStack:
    """Supervised pass: logistic read-out on the top layer, gradients
    backpropagated through every layer's weights and hidden biases."""
    if not stack.trained:
        raise NotReadyError("pretrain before fine-tuning")
    x0 = (np.atleast_2d(data) - stack.input_mean) / stack.input_std
    y = np.asarray(labels, dtype=np.float64)
    ws = [layer.W.copy() for layer in stack.layers]
    bs = [layer.a.copy() for layer in stack.layers]
    scales = [stack.layers[0].sigma] + [None, None]
    if stack.readout_w is not None:
        w_out = stack.readout_w.copy()
        b_out = stack.readout_b
    else:
        w_out = np.zeros(stack.layer_sizes[-1])
        b_out = 0.0
    n = len(x0)
    for _ in range(epochs):
        acts = [x0]
        for k in range(3):
            inp = acts[-1] / scales[k] if scales[k] is not None else acts[-1]
            acts.append(sigmoid(bs[k] + inp @ ws[k]))
        logits = b_out + acts[-1] @ w_out
        pred = sigmoid(logits)
        delta = (pred - y) / n
        grad_w_out = acts[-1].T @ delta
        grad_b_out = delta.sum()
        back = np.outer(delta, w_out)
        grads = []
        for k in reversed(range(3)):
            local = back * acts[k + 1] * (1.0 - acts[k + 1])
            inp = acts[k] / scales[k] if scales[k] is not None else acts[k]
            grads.append((inp.T @ local, local.sum(axis=0)))
            back = local @ ws[k].T
        for k in range(3):
            gw, gb = grads[2 - k]
            ws[k] -= lr * gw
            bs[k] -= lr * gb
        w_out -= lr * grad_w_out
        b_out -= lr * grad_b_out
        if not (np.isfinite(b_out) and all(np.all(np.isfinite(w)) for w in ws)):
            raise TrainingDivergenceError("fine-tune diverged")
    new_layers = [
        RbmLayerParams(ws[k], bs[k], stack.layers[k].b.copy(),
                       stack.layers[k].sigma2.copy(),
                       stack.layers[k].bernoulli_visible)
        for k in range(3)
    ]
    return DbnStack(new_layers, stack.layer_sizes, stack.input_mean,
                    stack.input_std, w_out, float(b_out))


def predict(stack: DbnStack, data: np.ndarray) -> np.ndarray:
    if stack.readout_w is None:
        raise NotReadyError("no read-out; fine-tune first")
    h = forward(stack, data)
    return sigmoid(stack.readout_b + h @ stack.readout_w)


def readout_loss(stack: DbnStack, data: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy of the read-out, the objective fine_tune descends."""
    pred = np.clip(predict(stack, data), 1e-12, 1.0 - 1e-12)
    y = np.asarray(labels, dtype=np.float64)
    return float(-np.mean(y * np.log(pred) + (1.0 - y) * np.log(1.0 - pred)))


# ------------------------------------------------------------- topics


@dataclass
class TopicState:
    """Additive-count topic assignments over (feature, row) items."""

    n_topics: int
    n_features: int
    n_rows: int
    theta: float = 1.0
    gamma_t: float = 0.1
    assignments: dict[int, tuple[int, int, int]] = field(default_factory=dict)
    feature_counts: np.ndarray = None
    row_counts: np.ndarray = None
    uniform_fallbacks: int = 0

    def __post_init__(self):
        if self.feature_counts is None:
            self.feature_counts = np.zeros((self.n_topics, self.n_features),
                                           dtype=np.int64)
        if self.row_counts is None:
            self.row_counts = np.zeros((self.n_topics, self.n_rows),
                                       dtype=np.int64)


def topic_probabilities(state: TopicState, w: int, d: int) -> np.ndarray:
    """Distribution over topics for an item with feature w in row d."""
    weights = (state.feature_counts[:, w].astype(np.float64)
               + state.theta * state.row_counts[:, d] + state.gamma_t)
    total = weights.sum()
    if total <= 0.0:
        state.uniform_fallbacks += 1
        return np.full(state.n_topics, 1.0 / state.n_topics)
    return weights / total


def topic_insert(state: TopicState, item: int, w: int, d: int, z: int):
    state.assignments[item] = (w, d, z)
    state.feature_counts[z, w] += 1
    state.row_counts[z, d] += 1


def topic_sample(state: TopicState, item: int, w: int, d: int,
                 rng: np.random.Generator) -> int:
    """Leave-one-out resample of one item's topic; counts updated."""
    if item in state.assignments:
        ow, od, oz = state.assignments.pop(item)
        state.feature_counts[oz, ow] -= 1
        state.row_counts[oz, od] -= 1
    probs = topic_probabilities(state, w, d)
    z = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    z = min(z, state.n_topics - 1)
    topic_insert(state, item, w, d, z)
    return z


# ------------------------------------------------------------- CF tree


@dataclass
class CfCluster:
    """Clustering feature: count, linear sum and squared-norm sum."""

    n: int
    ls: np.ndarray
    ss: float
    label_counts: dict[int, int] = field(default_factory=dict)

    @property
    def centroid(self) -> np.ndarray:
        return self.ls / self.n

    @property
    def radius2(self) -> float:
        r2 = self.ss / self.n - float(np.dot(self.centroid, self.centroid))
        return max(r2, 0.0)

    def absorb(self, point: np.ndarray, label=None):
        self.n += 1
        self.ls = self.ls + point
        self.ss += float(np.dot(point, point))
        if label is not None:
            self.label_counts[label] = self.label_counts.get(label, 0) + 1

    def merged_with(self, point: np.ndarray) -> "CfCluster":
        return CfCluster(self.n + 1, self.ls + point,
                         self.ss + float(np.dot(point, point)))

    @property
    def label(self):
        if not self.label_counts:
            return None
        return max(sorted(self.label_counts), key=lambda k: self.label_counts[k])


def merge_cf(a: CfCluster, b: CfCluster) -> CfCluster:
    counts = dict(a.label_counts)
    for k, v in b.label_counts.items():
        counts[k] = counts.get(k, 0) + v
    return CfCluster(a.n + b.n, a.ls + b.ls, a.ss + b.ss, counts)


class CfTree:
    """Height-balanced clustering-feature tree.

    Leaves hold clusters; a point lands in the nearest leaf cluster when
    the grown radius stays under the threshold, otherwise it opens a new
    cluster.  Overfull nodes split on the farthest pair, and splits
    propagate toward the root.
    """

    def __init__(self, threshold: float, branching: int = 8, dim: int = None):
        if threshold < 0 or branching < 2:
            raise ValueError("bad threshold or branching factor")
        self.threshold = threshold
        self.branching = branching
        self.dim = dim
        self.root = _CfNode(leaf=True)

    def insert(self, point: np.ndarray, label=None):
        point = np.asarray(point, dtype=np.float64)
        if self.dim is None:
            self.dim = point.shape[0]
        if point.shape[0] != self.dim:
            raise ValueError("dimension mismatch")
        split = self.root.insert(point, label, self.threshold, self.branching)
        if split is not None:
            new_root = _CfNode(leaf=False)
            new_root.children = list(split)
            self.root = new_root

    def clusters(self) -> list[CfCluster]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf:
                out.extend(node.entries)
            else:
                stack.extend(reversed(node.children))
        return out


class _CfNode:
    def __init__(self, leaf: bool):
        self.leaf = leaf
        self.entries: list[CfCluster] = []
        self.children: list[_CfNode] = []

    def summary(self) -> CfCluster:
        items = self.entries if self.leaf else [c.summary() for c in self.children]
        total = items[0]
        for c in items[1:]:
            total = merge_cf(total, c)
        return total

    def insert(self, point, label, threshold, branching):
        if self.leaf:
            if not self.entries:
                self.entries.append(_new_cluster(point, label))
                return None
            dists = [float(np.linalg.norm(c.centroid - point))
                     for c in self.entries]
            k = int(np.argmin(dists))
            grown = self.entries[k].merged_with(point)
            if np.sqrt(grown.radius2) <= threshold:
                self.entries[k].absorb(point, label)
                return None
            self.entries.append(_new_cluster(point, label))
            if len(self.entries) <= branching:
                return None
            return self._split(branching)
        dists = [float(np.linalg.norm(c.summary().centroid - point))
                 for c in self.children]
        k = int(np.argmin(dists))
        split = self.children[k].insert(point, label, threshold, branching)
        if split is None:
            return None
        self.children[k:k + 1] = list(split)
        if len(self.children) <= branching:
            return None
        return self._split(branching)

    def _split(self, branching):
        items = self.entries if self.leaf else self.children
        cents = [c.centroid if self.leaf else c.summary().centroid
                 for c in items]
        best = (0, 1)
        best_d = -1.0
        for i in range(len(cents)):
            for j in range(i + 1, len(cents)):
                d = float(np.linalg.norm(cents[i] - cents[j]))
                if d > best_d:
                    best_d = d
                    best = (i, j)
        seed_a, seed_b = best
        left = _CfNode(self.leaf)
        right = _CfNode(self.leaf)
        for idx, item in enumerate(items):
            da = float(np.linalg.norm(cents[idx] - cents[seed_a]))
            db = float(np.linalg.norm(cents[idx] - cents[seed_b]))
            target = left if da <= db else right
            if self.leaf:
                target.entries.append(item)
            else:
                target.children.append(item)
        return left, right


def _new_cluster(point, label):
    counts = {} if label is None else {label: 1}
    return CfCluster(1, point.copy(), float(np.dot(point, point)), counts)


def birch_insert(tree: CfTree, point, label=None) -> CfTree:
    tree.insert(point, label)
    return tree


def classify_event(stack: DbnStack, tree: CfTree, reading: np.ndarray):
    """Label and confidence for one reading: nearest top-layer centroid,
    confidence from inverse distances over the two nearest clusters."""
    if not stack.trained:
        raise NotReadyError("train the stack first")
    clusters = tree.clusters()
    if not clusters:
        raise ValueError("tree has no clusters")
    feat = forward(stack, reading)[0]
    dists = sorted((float(np.linalg.norm(c.centroid - feat)), i)
                   for i, c in enumerate(clusters))
    d1, best = dists[0]
    if len(dists) == 1:
        return clusters[best].label, 1.0
    d2 = dists[1][0]
    if d1 == 0.0:
        return clusters[best].label, 1.0
    conf = (1.0 / d1) / (1.0 / d1 + 1.0 / d2)
    return clusters[best].label, conf


def handle_reading(stack: DbnStack, tree: CfTree, reading: np.ndarray,
                   reactive: bool):
    """Route one reading: reactive readings raise an immediate event with
    full confidence, proactive ones go through the network and tree."""
    if reactive:
        return 1, 1.0
    return classify_event(stack, tree, reading)


# -------------------------------------------------------- checkpoints


def save_checkpoint(stack: DbnStack, path: str, seed: int, epoch: int):
    """Documented flat binary: one JSON header line, then each array as
    row-major little-endian float64 in header order."""
    arrays = []
    names = []
    for k, layer in enumerate(stack.layers):
        for part in ("W", "a", "b", "sigma2"):
            arr = getattr(layer, part)
            names.append({"name": f"layer{k}.{part}", "shape": list(arr.shape)})
            arrays.append(np.ascontiguousarray(arr, dtype="<f8"))
    for name, arr in (("input_mean", stack.input_mean),
                      ("input_std", stack.input_std)):
        names.append({"name": name, "shape": list(arr.shape)})
        arrays.append(np.ascontiguousarray(arr, dtype="<f8"))
    if stack.readout_w is not None:
        names.append({"name": "readout_w", "shape": list(stack.readout_w.shape)})
        arrays.append(np.ascontiguousarray(stack.readout_w, dtype="<f8"))
    header = {
        "layer_sizes": list(stack.layer_sizes),
        "seed": seed,
        "epoch": epoch,
        "readout_b": stack.readout_b,
        "arrays": names,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for arr in arrays:
            fh.write(arr.tobytes())


def load_checkpoint(path: str) -> tuple[DbnStack, int, int]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        blobs = {}
        for meta in header["arrays"]:
            count = int(np.prod(meta["shape"])) if meta["shape"] else 1
            data = fh.read(8 * count)
            blobs[meta["name"]] = np.frombuffer(data, dtype="<f8").reshape(
                meta["shape"]).copy()
    layers = []
    for k in range(3):
        layers.append(RbmLayerParams(
            blobs[f"layer{k}.W"], blobs[f"layer{k}.a"], blobs[f"layer{k}.b"],
            blobs[f"layer{k}.sigma2"], bernoulli_visible=(k > 0)))
    stack = DbnStack(layers, tuple(header["layer_sizes"]),
                     blobs["input_mean"], blobs["input_std"],
                     blobs.get("readout_w"), header["readout_b"])
    return stack, header["seed"], header["epoch"]


# ----------------------------------------------------------- benchmark


def make_event_dataset(n: int, rng: np.random.Generator):
    """Two-class synthetic readings: events elevate four signal channels
    by a fixed signature over background, while six distractor channels
    carry wide unrelated noise that dominates raw Euclidean distances."""
    labels = rng.integers(0, 2, n)
    signature = np.array([1.2, 1.0, 0.8, 1.1])
    informative = (labels[:, None] * signature
                   + 0.6 * rng.standard_normal((n, 4)))
    distractors = 3.0 * rng.standard_normal((n, 6))
    return np.hstack([informative, distractors]), labels.astype(np.int64)


def _birch_threshold(features: np.ndarray, rng: np.random.Generator) -> float:
    sample = features[rng.choice(len(features), min(200, len(features)),
                                 replace=False)]
    d = []
    for i in range(0, len(sample) - 1, 2):
        d.append(float(np.linalg.norm(sample[i] - sample[i + 1])))
    return 0.5 * float(np.median(d))


def _birch_error(train_x, train_y, test_x, test_y, rng) -> float:
    tree = CfTree(_birch_threshold(train_x, rng), branching=8)
    for x, y in zip(train_x, train_y):
        tree.insert(x, int(y))
    clusters = tree.clusters()
    cents = np.array([c.centroid for c in clusters])
    labels = np.array([c.label if c.label is not None else 0
                       for c in clusters])
    wrong = 0
    for x, y in zip(test_x, test_y):
        k = int(np.argmin(np.linalg.norm(cents - x, axis=1)))
        wrong += int(labels[k] != y)
    return wrong / len(test_y)


def evaluate_pipelines(layer_sizes: tuple[int, int, int], n: int, seed: int,
                       cfg: CdConfig | None = None):
    """Paired benchmark: error of the learned-feature pipeline vs the
    clustering tree on raw readings, same split."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(71,)))
    x, y = make_event_dataset(n, rng)
    split = int(0.8 * n)
    train_x, test_x = x[:split], x[split:]
    train_y, test_y = y[:split], y[split:]

    raw_error = _birch_error(train_x, train_y, test_x, test_y, rng)

    cfg = cfg or CdConfig(lr=0.1, t_steps=1, batch=32, epochs=10)
    sizes = (x.shape[1],) + tuple(layer_sizes)
    stack = train_dbn(train_x, sizes, cfg, rng)
    stack = fine_tune(stack, train_x, train_y, lr=0.5, epochs=300)
    feats_train = forward(stack, train_x)
    tree = CfTree(_birch_threshold(feats_train, rng), branching=8)
    for f, lab in zip(feats_train, train_y):
        tree.insert(f, int(lab))
    clusters = tree.clusters()
    cents = np.array([c.centroid for c in clusters])
    labels = np.array([c.label if c.label is not None else 0
                       for c in clusters])
    feats_test = forward(stack, test_x)
    wrong = 0
    for f, yy in zip(feats_test, test_y):
        k = int(np.argmin(np.linalg.norm(cents - f, axis=1)))
        wrong += int(labels[k] != yy)
    hybrid_error = wrong / len(test_y)
    return hybrid_error, raw_error
