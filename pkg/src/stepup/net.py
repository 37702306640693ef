"""Dense networks with hand-rolled backprop, Adam, and checkpointing.

Everything is float32 numpy; reductions may accumulate in float64. Forward
passes return an activation cache that backward consumes, so the nets stay
stateless and trivially parallel across environment batches.
"""

import binascii
import json

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))

CHECKPOINT_FORMAT = "stepup-checkpoint"
CHECKPOINT_VERSION = 1


class DimensionMismatch(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


class ChecksumMismatch(ValueError):
    pass


def _orthogonal(rows, cols, gain, rng):
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    qmat, rmat = np.linalg.qr(a)
    qmat = qmat * np.sign(np.diag(rmat))
    if rows < cols:
        qmat = qmat.T
    # C-contiguous so fresh and checkpoint-loaded nets take identical BLAS paths
    return np.ascontiguousarray((gain * qmat[:rows, :cols]), dtype=np.float32)


def elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x):
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0))).astype(x.dtype)


class DenseNet:
    """Chain of affine layers with elu or identity activations."""

    def __init__(self, weights, biases, activations):
        if not (len(weights) == len(biases) == len(activations)):
            raise DimensionMismatch("layer lists must align")
        for i in range(len(weights) - 1):
            if weights[i + 1].shape[1] != weights[i].shape[0]:
                raise DimensionMismatch(
                    f"layer {i} outputs {weights[i].shape[0]}, "
                    f"layer {i + 1} expects {weights[i + 1].shape[1]}")
        for act in activations:
            if act not in ("elu", "identity"):
                raise ValueError(f"unknown activation {act!r}")
        self.weights = [np.ascontiguousarray(w, dtype=np.float32) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float32) for b in biases]
        self.activations = list(activations)

    @classmethod
    def create(cls, sizes, rng, hidden_activation="elu", out_gain=1.0):
        """Orthogonal-init net for [in, h1, ..., out] sizes."""
        weights, biases, acts = [], [], []
        for i in range(len(sizes) - 1):
            last = i == len(sizes) - 2
            gain = out_gain if last else np.sqrt(2.0)
            weights.append(_orthogonal(sizes[i + 1], sizes[i], gain, rng))
            biases.append(np.zeros(sizes[i + 1], dtype=np.float32))
            acts.append("identity" if last else hidden_activation)
        return cls(weights, biases, acts)

    @property
    def sizes(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def input_dim(self):
        return self.weights[0].shape[1]

    @property
    def output_dim(self):
        return self.weights[-1].shape[0]

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def forward(self, x, need_cache=False):
        """Forward pass on (B, in) or (in,); optionally returns the cache.

        Computation runs in the input's float dtype (float64 inputs promote
        the float32 parameters), so gradient checks can use full precision
        while training stays in float32.
        """
        x = np.asarray(x)
        if not np.issubdtype(x.dtype, np.floating):
            x = x.astype(np.float32)
        squeeze = x.ndim == 1
        h = np.atleast_2d(x)
        if h.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"input dim {h.shape[1]}, net expects {self.input_dim}")
        cache = []
        for w, b, act in zip(self.weights, self.biases, self.activations):
            pre = h @ w.T + b
            cache.append((h, pre))
            h = elu(pre) if act == "elu" else pre
        out = h[0] if squeeze else h
        return (out, cache) if need_cache else out

    def backward(self, cache, grad_out):
        """Gradients for a cached forward pass.

        Returns (param_grads aligned with parameters(), grad wrt input).
        """
        if len(cache) != len(self.weights):
            raise DimensionMismatch("cache does not match network depth")
        g = np.atleast_2d(np.asarray(grad_out))
        if g.shape[1] != self.output_dim:
            raise DimensionMismatch(
                f"grad dim {g.shape[1]}, net outputs {self.output_dim}")
        grads = [None] * (2 * len(self.weights))
        for i in reversed(range(len(self.weights))):
            h_in, pre = cache[i]
            if self.activations[i] == "elu":
                g = g * elu_grad(pre)
            grads[2 * i] = g.T @ h_in
            grads[2 * i + 1] = g.sum(axis=0)
            if i > 0:
                g = g @ self.weights[i]
        return grads, g @ self.weights[0]

    def copy(self):
        return DenseNet([w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.activations)


class GaussianPolicy:
    """Diagonal-Gaussian policy: dense mean trunk + state-independent log-std."""

    def __init__(self, trunk: DenseNet, log_std):
        self.trunk = trunk
        self.log_std = np.asarray(log_std, dtype=np.float32)

    @classmethod
    def create(cls, obs_dim, action_dim, hidden, rng, init_log_std=0.0):
        trunk = DenseNet.create([obs_dim] + list(hidden) + [action_dim], rng,
                                out_gain=0.01)
        return cls(trunk, np.full(action_dim, init_log_std, dtype=np.float32))

    @property
    def std(self):
        # float64 so that log(std) == log_std exactly; keeps the Gaussian
        # density internally consistent while the trunk stays float32
        return np.exp(self.log_std.astype(np.float64))

    def parameters(self):
        return self.trunk.parameters() + [self.log_std]

    def mean(self, obs):
        return self.trunk.forward(obs)

    def sample(self, obs, rng):
        """Draw actions; returns (action, log_prob)."""
        mean = self.trunk.forward(obs)
        noise = rng.standard_normal(mean.shape)
        action = mean + self.std * noise
        return action, self.log_prob_given_mean(mean, action)

    def log_prob_given_mean(self, mean, action):
        z = (np.asarray(action, dtype=np.float64) - mean) / self.std
        per_dim = -0.5 * z * z - self.log_std.astype(np.float64) - 0.5 * LOG_2PI
        return per_dim.sum(axis=-1)

    def log_prob(self, obs, action):
        return self.log_prob_given_mean(self.trunk.forward(obs), action)

    def entropy(self):
        return float((0.5 + 0.5 * LOG_2PI + self.log_std).sum())

    def copy(self):
        return GaussianPolicy(self.trunk.copy(), self.log_std.copy())


def make_value_net(input_dim, hidden, rng) -> DenseNet:
    return DenseNet.create([input_dim] + list(hidden) + [1], rng, out_gain=1.0)


def sample_action(policy: GaussianPolicy, obs, rng):
    """Single-observation convenience wrapper over GaussianPolicy.sample."""
    action, log_prob = policy.sample(np.asarray(obs, dtype=np.float32), rng)
    return action, float(np.asarray(log_prob))


class Adam:
    """Bias-corrected Adam over a list of same-shaped parameter arrays."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.step_count = 0

    def step(self, grads, lr):
        if len(grads) != len(self.params):
            raise DimensionMismatch("gradient list does not match parameters")
        self.step_count += 1
        b1c = 1.0 - self.beta1 ** self.step_count
        b2c = 1.0 - self.beta2 ** self.step_count
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            g = np.asarray(g, dtype=p.dtype)
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def adam_update(params, grads, adam: Adam, lr):
    """In-place Adam step on `params` registered with `adam`."""
    assert params is adam.params or all(p is q for p, q in zip(params, adam.params))
    adam.step(grads, lr)
    return params


# -- checkpoint files --------------------------------------------------------
#
# Layout: one JSON header line (format, version, net layer sizes, rng seed,
# training iteration, parameter count, payload crc32), then newline, then the
# parameters as flat little-endian float32 in declared order: for each net in
# sorted name order, W then b per layer, then policy extras (log_std last).

def _flatten_params(nets: dict):
    names = sorted(nets)
    arrays = []
    meta_sizes = {}
    for name in names:
        net = nets[name]
        if isinstance(net, GaussianPolicy):
            meta_sizes[name] = {"sizes": net.trunk.sizes, "log_std": True}
            arrays += net.trunk.parameters() + [net.log_std]
        else:
            meta_sizes[name] = {"sizes": net.sizes, "log_std": False}
            arrays += net.parameters()
    return names, arrays, meta_sizes


def save_params(nets: dict, path, seed=0, iteration=0):
    """Write a versioned checkpoint; round-trips bit-exactly."""
    _, arrays, meta_sizes = _flatten_params(nets)
    payload = b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes()
                       for a in arrays)
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "nets": meta_sizes,
        "seed": int(seed),
        "iteration": int(iteration),
        "param_count": sum(int(a.size) for a in arrays),
        "crc32": binascii.crc32(payload) & 0xFFFFFFFF,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(payload)


def load_params(path, expected_sizes=None):
    """Load a checkpoint; returns (nets dict, header dict).

    expected_sizes, when given, maps net name -> layer size list and a
    mismatch raises VersionMismatch. Truncated or corrupt payloads raise
    ChecksumMismatch.
    """
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise VersionMismatch(f"unreadable checkpoint header: {err}") from None
    if header.get("format") != CHECKPOINT_FORMAT:
        raise VersionMismatch(f"not a {CHECKPOINT_FORMAT} file")
    if header.get("version") != CHECKPOINT_VERSION:
        raise VersionMismatch(f"unsupported version {header.get('version')}")
    if binascii.crc32(payload) & 0xFFFFFFFF != header["crc32"]:
        raise ChecksumMismatch("payload checksum mismatch (truncated file?)")
    flat = np.frombuffer(payload, dtype="<f4")
    if flat.size != header["param_count"]:
        raise ChecksumMismatch(
            f"expected {header['param_count']} parameters, got {flat.size}")

    nets = {}
    offset = 0

    def take(shape):
        nonlocal offset
        n = int(np.prod(shape))
        arr = flat[offset:offset + n].reshape(shape).copy()
        offset += n
        return arr

    for name in sorted(header["nets"]):
        spec = header["nets"][name]
        sizes = spec["sizes"]
        if expected_sizes is not None and list(expected_sizes.get(name, [])) != list(sizes):
            raise VersionMismatch(
                f"net {name!r} sizes {sizes} != expected {expected_sizes.get(name)}")
        weights, biases = [], []
        for i in range(len(sizes) - 1):
            weights.append(take((sizes[i + 1], sizes[i])))
            biases.append(take((sizes[i + 1],)))
        acts = ["elu"] * (len(sizes) - 2) + ["identity"]
        net = DenseNet(weights, biases, acts)
        if spec["log_std"]:
            nets[name] = GaussianPolicy(net, take((sizes[-1],)))
        else:
            nets[name] = net
    return nets, header
