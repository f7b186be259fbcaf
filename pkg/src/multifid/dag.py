"""The searchable network: a DAG of mixed-operation edges.

Nodes 0 .. n_cells-1 are topologically ordered; every ordered pair (i, j)
with i < j carries one MixedEdge and node j sums its incoming edge outputs:

    h_0 = x,   h_j = sum_{i<j} edge(i,j)(h_i),   prediction = h_{n_cells-1}

Edges leaving node 0 take the network input width; edges into the last node
produce the output width; everything else uses the common node width.  The
continuous operation mixture is kept at inference time (no discretization
step after the search): fine-tuning later adjusts the logits directly.

Networks are mutable while a trainer owns them and safely shareable for
parallel prediction once training is done.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import ParamGroup, Tensor
from .candidates import CandidateOp, MixedEdge, OpKind, mixed_forward
from .errors import ConfigError, ShapeMismatch

FORMAT_TAG = "multifid-network-v1"


@dataclass
class DagConfig:
    """Node count and boundary widths; n_cells counts input + intermediates + output."""

    n_cells: int
    in_dim: int
    out_dim: int
    node_width: int = 20

    def __post_init__(self):
        if not 2 <= self.n_cells <= 7:
            raise ConfigError(f"n_cells must be in [2, 7], got {self.n_cells}")
        if self.in_dim < 1 or self.out_dim < 1 or self.node_width < 1:
            raise ConfigError("in_dim, out_dim and node_width must be >= 1")


class DmfNetwork:
    """DAG of mixed edges over ``config.n_cells`` nodes."""

    def __init__(self, config: DagConfig, edges: dict):
        self.config = config
        self.edges = edges  # {(i, j): MixedEdge}, insertion order (0,1), (0,2), ...

    def edge_dims(self, i: int, j: int):
        c = self.config
        in_dim = c.in_dim if i == 0 else c.node_width
        out_dim = c.out_dim if j == c.n_cells - 1 else c.node_width
        return in_dim, out_dim


def build_dag(config: DagConfig, seed: int) -> DmfNetwork:
    """Build all C(n_cells, 2) edges with per-edge dims; deterministic in seed."""
    rng = np.random.default_rng(seed)
    edges = {}
    net = DmfNetwork(config, edges)
    for i in range(config.n_cells):
        for j in range(i + 1, config.n_cells):
            in_dim, out_dim = net.edge_dims(i, j)
            edges[(i, j)] = MixedEdge(in_dim, out_dim, rng)
    return net


def dag_forward(net: DmfNetwork, x: Tensor) -> Tensor:
    """Topological evaluation; returns the last node's value."""
    if x.data.ndim != 2 or x.data.shape[1] != net.config.in_dim:
        raise ShapeMismatch("dag_forward", x.data.shape, ("n", net.config.in_dim))
    nodes = [x]
    for j in range(1, net.config.n_cells):
        incoming = [mixed_forward(net.edges[(i, j)], nodes[i]) for i in range(j)]
        nodes.append(ad.add_n(incoming))
    return nodes[-1]


def param_groups(net: DmfNetwork):
    """Split trainable tensors into the layer-weight and architecture groups.

    Every tensor lands in exactly one group: alpha logits under
    "architecture", all affine weights and biases under "weights".
    """
    weights = ParamGroup("weights")
    arch = ParamGroup("architecture")
    for (i, j), edge in net.edges.items():
        prefix = f"edge_{i}_{j}"
        arch.add(f"{prefix}/alpha", edge.alpha)
        for op in edge.ops:
            for li, (w, b) in enumerate(op.layers):
                weights.add(f"{prefix}/{op.kind.name.lower()}/l{li}/w", w)
                weights.add(f"{prefix}/{op.kind.name.lower()}/l{li}/b", b)
    return weights, arch


def n_params(net: DmfNetwork) -> int:
    w, a = param_groups(net)
    return w.n_params() + a.n_params()


# ---------------------------------------------------------------------------
# Serialization: JSON with base64-encoded row-major float64 weight buffers.
# Round trips are bit-exact.
# ---------------------------------------------------------------------------


def _encode(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode(s: str, shape) -> np.ndarray:
    buf = base64.b64decode(s.encode("ascii"))
    return np.frombuffer(buf, dtype="<f8").reshape(shape).copy()


def network_to_doc(net: DmfNetwork) -> dict:
    doc = {
        "format": FORMAT_TAG,
        "config": {
            "n_cells": net.config.n_cells,
            "in_dim": net.config.in_dim,
            "out_dim": net.config.out_dim,
            "node_width": net.config.node_width,
        },
        "edges": [],
    }
    for (i, j), edge in net.edges.items():
        edoc = {
            "from": i,
            "to": j,
            "alpha": [float(v) for v in edge.alpha.data],
            "ops": [],
        }
        for op in edge.ops:
            edoc["ops"].append({
                "kind": op.kind.name.lower(),
                "layers": [
                    {"shape": list(w.data.shape), "w": _encode(w.data), "b": _encode(b.data)}
                    for w, b in op.layers
                ],
            })
        doc["edges"].append(edoc)
    return doc


def network_from_doc(doc: dict) -> DmfNetwork:
    if doc.get("format") != FORMAT_TAG:
        raise ConfigError(f"unknown network format {doc.get('format')!r}")
    cfg = DagConfig(**doc["config"])
    edges = {}
    net = DmfNetwork(cfg, edges)
    for edoc in doc["edges"]:
        i, j = edoc["from"], edoc["to"]
        in_dim, out_dim = net.edge_dims(i, j)
        edge = MixedEdge.__new__(MixedEdge)
        edge.in_dim, edge.out_dim = in_dim, out_dim
        edge.alpha = Tensor(np.array(edoc["alpha"], dtype=np.float64))
        edge.ops = []
        for odoc in edoc["ops"]:
            kind = OpKind[odoc["kind"].upper()]
            layers = []
            for ldoc in odoc["layers"]:
                p, q = ldoc["shape"]
                layers.append((Tensor(_decode(ldoc["w"], (p, q))),
                               Tensor(_decode(ldoc["b"], (q,)))))
            edge.ops.append(CandidateOp(kind, in_dim, out_dim, layers))
        edges[(i, j)] = edge
    return net


def save_network(net: DmfNetwork, path):
    with open(path, "w", newline="\n") as fh:
        json.dump(network_to_doc(net), fh, indent=1)
        fh.write("\n")


def load_network(path) -> DmfNetwork:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such network file: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}")
    return network_from_doc(doc)
