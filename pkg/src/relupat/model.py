"""Fully connected ReLU networks: representation, file formats, evaluation."""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class NetworkFormatError(ValueError):
    """Raised when a network file cannot be parsed."""


class NeuronId(NamedTuple):
    """A hidden neuron: ``layer`` is 1-based, ``index`` is 0-based."""

    layer: int
    index: int

    def __str__(self):
        return f"N{self.layer},{self.index}"


@dataclass(frozen=True, eq=False)
class Network:
    """Layered affine maps with ReLU on every hidden layer.

    ``weights[j]`` has shape ``(width_j, width_{j-1})``; the last entry is the
    affine output layer. ``input_domain`` is an optional ``(n, 2)`` array of
    per-dimension bounds.
    """

    weights: tuple
    biases: tuple
    input_domain: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=float, copy=True) for w in self.weights)
        bs = tuple(np.array(b, dtype=float, copy=True).reshape(-1) for b in self.biases)
        if len(ws) < 2:
            raise NetworkFormatError("need at least one hidden layer and an output layer")
        if len(ws) != len(bs):
            raise NetworkFormatError("weights and biases have different layer counts")
        prev = None
        for j, (w, b) in enumerate(zip(ws, bs), start=1):
            if w.ndim != 2:
                raise NetworkFormatError(f"layer {j}: weight matrix must be 2-D")
            if w.shape[0] != b.shape[0]:
                raise NetworkFormatError(
                    f"layer {j}: {w.shape[0]} weight rows but {b.shape[0]} biases")
            if prev is not None and w.shape[1] != prev:
                raise NetworkFormatError(
                    f"layer {j}: expected {prev} columns, got {w.shape[1]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NetworkFormatError(f"layer {j}: non-finite weight or bias")
            w.setflags(write=False)
            b.setflags(write=False)
            prev = w.shape[0]
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)
        if self.input_domain is not None:
            dom = np.array(self.input_domain, dtype=float).reshape(-1, 2)
            if dom.shape[0] != ws[0].shape[1]:
                raise NetworkFormatError("input_domain length differs from input_dim")
            if np.any(dom[:, 0] > dom[:, 1]):
                raise NetworkFormatError("input_domain has lo > hi")
            dom.setflags(write=False)
            object.__setattr__(self, "input_domain", dom)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def num_hidden(self) -> int:
        return len(self.weights) - 1

    @property
    def widths(self) -> list[int]:
        """Widths of the hidden layers, in order."""
        return [w.shape[0] for w in self.weights[:-1]]

    def width(self, layer: int) -> int:
        return self.weights[layer - 1].shape[0]

    def neurons(self, layer: int | None = None) -> list[NeuronId]:
        layers = range(1, self.num_hidden + 1) if layer is None else [layer]
        return [NeuronId(l, i) for l in layers for i in range(self.width(l))]

    def check_neuron(self, nid: NeuronId):
        if not (1 <= nid.layer <= self.num_hidden and 0 <= nid.index < self.width(nid.layer)):
            raise KeyError(f"{nid} is not a hidden neuron of this network")

    def with_domain(self, domain) -> "Network":
        return Network(self.weights, self.biases, domain, dict(self.metadata))


def _check_input(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.input_dim:
        raise ValueError(f"input has dimension {x.shape[-1]}, network expects {net.input_dim}")
    return x


def hidden_values(net: Network, x, upto: int | None = None) -> list[np.ndarray]:
    """Post-ReLU values of hidden layers ``1..upto`` (all by default).

    Works on a single vector or a batch of row vectors.
    """
    h = _check_input(net, x)
    upto = net.num_hidden if upto is None else upto
    out = []
    for w, b in zip(net.weights[:upto], net.biases[:upto]):
        h = np.maximum(h @ w.T + b, 0.0)
        out.append(h)
    return out


def forward_from(net: Network, h, layer: int) -> np.ndarray:
    """Finish the forward pass given post-ReLU values ``h`` of ``layer``."""
    for w, b in zip(net.weights[layer:-1], net.biases[layer:-1]):
        h = np.maximum(h @ w.T + b, 0.0)
    return h @ net.weights[-1].T + net.biases[-1]


def evaluate(net: Network, x) -> np.ndarray:
    """Network output for ``x`` (a vector, or a batch of rows)."""
    x = _check_input(net, x)
    return forward_from(net, x, 0)


def activation_signature(net: Network, x):
    """The total on/off pattern observed when evaluating ``x``."""
    from .pattern import DecisionPattern

    values = hidden_values(net, np.asarray(x, dtype=float).reshape(-1))
    return DecisionPattern({NeuronId(l, i): bool(v > 0)
                            for l, layer in enumerate(values, start=1)
                            for i, v in enumerate(layer)})


def signature_matrix(net: Network, X, layer: int) -> np.ndarray:
    """Boolean on-status of every neuron of ``layer`` for each row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return hidden_values(net, X, upto=layer)[-1] > 0


def predicted_class(y, mode: str = "argmax"):
    """Top class of output ``y`` (lowest index wins ties)."""
    y = np.asarray(y)
    return np.argmin(y, axis=-1) if mode == "argmin" else np.argmax(y, axis=-1)


# ---------------------------------------------------------------------------
# file formats


def _read_text(source) -> tuple[str, str]:
    if isinstance(source, (bytes, bytearray)):
        return source.decode("utf-8"), "<bytes>"
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return data, getattr(source, "name", "<stream>")
    with open(source, encoding="utf-8") as f:
        return f.read(), os.fspath(source)


def load_network(source, format: str | None = None, normalize: bool = False) -> Network:
    """Load a network from a JSON or NNet file, byte string or stream.

    ``format`` is ``"json"`` or ``"nnet"``; it is guessed from the file suffix
    when omitted. With ``normalize=True`` the NNet input/output normalization
    is folded into the first and last layers.
    """
    text, name = _read_text(source)
    if format is None:
        format = "nnet" if str(name).lower().endswith(".nnet") else "json"
    format = format.lower()
    if format == "json":
        return network_from_json(text, name)
    if format == "nnet":
        return _parse_nnet(text, name, normalize)
    raise ValueError(f"unknown network format {format!r}")


def network_from_json(text: str, name: str = "<json>") -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise NetworkFormatError(f"{name}: line {e.lineno}: {e.msg}") from e
    return network_from_dict(doc, name)


def network_from_dict(doc: dict, name: str = "<json>") -> Network:
    try:
        layers = doc["layers"]
        weights = [np.array(layer["weights"], dtype=float) for layer in layers]
        biases = [np.array(layer["bias"], dtype=float) for layer in layers]
    except (KeyError, TypeError, ValueError) as e:
        raise NetworkFormatError(f"{name}: malformed layer entry ({e})") from e
    net = Network(weights, biases, doc.get("input_domain"))
    for key, actual in (("input_dim", net.input_dim), ("output_dim", net.output_dim)):
        if key in doc and int(doc[key]) != actual:
            raise NetworkFormatError(f"{name}: field {key}={doc[key]} but layers give {actual}")
    return net


def network_to_dict(net: Network) -> dict:
    doc = {
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "layers": [{"weights": w.tolist(), "bias": b.tolist()}
                   for w, b in zip(net.weights, net.biases)],
    }
    if net.input_domain is not None:
        doc["input_domain"] = net.input_domain.tolist()
    return doc


def save_network(net: Network, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(network_to_dict(net), f)


def _nnet_rows(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("//"):
            continue
        fields = [t.strip() for t in s.split(",")]
        if fields and fields[-1] == "":
            fields.pop()
        yield lineno, fields


def _parse_nnet(text: str, name: str, normalize: bool) -> Network:
    rows = _nnet_rows(text)

    def take(kind, count=None):
        try:
            lineno, fields = next(rows)
        except StopIteration:
            raise NetworkFormatError(f"{name}: unexpected end of file reading {kind}") from None
        try:
            vals = [float(t) for t in fields]
        except ValueError:
            raise NetworkFormatError(f"{name}: line {lineno}: non-numeric {kind}") from None
        if count is not None and len(vals) < count:
            raise NetworkFormatError(
                f"{name}: line {lineno}: expected {count} values for {kind}, got {len(vals)}")
        if not np.all(np.isfinite(vals)):
            raise NetworkFormatError(f"{name}: line {lineno}: non-finite value in {kind}")
        return lineno, vals[:count] if count is not None else vals

    _, head = take("header", 4)
    num_layers, n_in, n_out, _max = (int(v) for v in head)
    lineno, sizes = take("layer sizes", num_layers + 1)
    sizes = [int(s) for s in sizes]
    if sizes[0] != n_in or sizes[-1] != n_out:
        raise NetworkFormatError(f"{name}: line {lineno}: layer sizes disagree with header")
    take("symmetric flag")
    _, mins = take("input minimums", n_in)
    _, maxs = take("input maximums", n_in)
    _, means = take("means", n_in + 1)
    _, ranges = take("ranges", n_in + 1)
    weights, biases = [], []
    for j in range(num_layers):
        w = np.empty((sizes[j + 1], sizes[j]))
        for r in range(sizes[j + 1]):
            w[r] = take(f"layer {j + 1} weight row {r}", sizes[j])[1]
        b = np.array([take(f"layer {j + 1} bias {r}", 1)[1][0] for r in range(sizes[j + 1])])
        weights.append(w)
        biases.append(b)
    meta = {"nnet": {"mins": mins, "maxs": maxs, "means": means, "ranges": ranges}}
    mins, maxs = np.array(mins), np.array(maxs)
    mu, rng = np.array(means[:n_in]), np.array(ranges[:n_in])
    if normalize:
        # x_norm = (x - mu) / rng ; y = y_norm * rng_out + mu_out
        w0 = weights[0] / rng
        weights[0] = w0
        biases[0] = biases[0] - w0 @ mu
        weights[-1] = weights[-1] * ranges[-1]
        biases[-1] = biases[-1] * ranges[-1] + means[-1]
        domain = np.column_stack([mins, maxs])
        meta["normalized"] = True
    else:
        domain = np.column_stack([(mins - mu) / rng, (maxs - mu) / rng])
        meta["normalized"] = False
    return Network(weights, biases, domain, meta)


def write_nnet(net: Network, path, mins=None, maxs=None, means=None, ranges=None):
    """Write ``net`` in NNet text format (no normalization by default)."""
    n = net.input_dim
    sizes = [n] + [w.shape[0] for w in net.weights]
    if mins is None or maxs is None:
        dom = net.input_domain if net.input_domain is not None else np.tile([-1e6, 1e6], (n, 1))
        mins, maxs = dom[:, 0], dom[:, 1]
    means = np.zeros(n + 1) if means is None else means
    ranges = np.ones(n + 1) if ranges is None else ranges

    def line(vals):
        return ",".join(repr(float(v)) for v in vals) + ",\n"

    with open(path, "w", encoding="utf-8") as f:
        f.write("// Neural network in NNet format\n")
        f.write(f"{len(net.weights)},{n},{net.output_dim},{max(sizes)},\n")
        f.write(",".join(str(s) for s in sizes) + ",\n")
        f.write("0,\n")
        for vals in (mins, maxs, means, ranges):
            f.write(line(vals))
        for w, b in zip(net.weights, net.biases):
            for row in w:
                f.write(line(row))
            for v in b:
                f.write(line([v]))


def random_network(widths: Sequence[int], rng=None, scale: float = 1.0,
                   bias_scale: float = 0.5, domain=None) -> Network:
    """Random dense network; ``widths`` lists input, hidden and output sizes."""
    rng = np.random.default_rng(rng)
    weights, biases = [], []
    for a, b in zip(widths[:-1], widths[1:]):
        weights.append(rng.normal(0.0, scale / np.sqrt(a), size=(b, a)))
        biases.append(rng.normal(0.0, bias_scale, size=b))
    return Network(weights, biases, domain)


def figure1_network() -> Network:
    """The two-input, two-hidden-layer example network with zero biases."""
    return Network(
        [[[1.0, -1.0], [1.0, 1.0]], [[0.5, -0.2], [-0.5, 0.1]], [[1.0, -1.0], [-1.0, 1.0]]],
        [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
    )
