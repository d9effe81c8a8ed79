"""Embedding network: fully connected layers plus one aggregation layer.

The default stack maps node features to a latent space through two hidden FC
layers with LeakyReLU, one FCA layer (a linear layer followed by
symmetric-normalized neighbor aggregation, i.e. a GCN layer without an
activation), and a final linear FC layer.  Forward passes can record a
gradient tape; ``backward`` replays it in reverse to produce exact
reverse-mode gradients for every weight and bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import AdjacencyMatrix

__all__ = [
    "LayerSpec",
    "NetworkParams",
    "GradientTape",
    "StaleTapeError",
    "default_stack",
    "init_network",
    "aggregation_matrix",
    "fc_forward",
    "fca_forward",
    "forward",
    "backward",
]

LEAKY_SLOPE = 0.01


class StaleTapeError(RuntimeError):
    """The parameters changed since this tape was recorded."""


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the stack.

    ``kind`` is "fc" or "fca"; ``activation`` applies only to fc layers
    (fca is always linear).  ``fca_variant`` picks the aggregation
    normalization: "gcn" divides by the square-root degrees, "verbatim"
    multiplies by them.  ``self_loops`` adds the identity to the adjacency
    before normalizing.
    """

    kind: str
    in_dim: int
    out_dim: int
    activation: str = "linear"
    fca_variant: str = "gcn"
    self_loops: bool = True

    def __post_init__(self):
        if self.kind not in ("fc", "fca"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ("linear", "relu", "leaky_relu"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.fca_variant not in ("gcn", "verbatim"):
            raise ValueError(f"unknown fca variant {self.fca_variant!r}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("layer dims must be positive")
        if self.kind == "fca" and self.activation != "linear":
            raise ValueError("fca layers take no activation")


@dataclass
class NetworkParams:
    """Weights and biases for a layer chain.

    ``version`` counts in-place updates; tapes recorded under an older
    version refuse to replay.
    """

    specs: tuple
    weights: list
    biases: list
    seed: int
    version: int = 0

    def bump(self):
        self.version += 1

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            self.specs,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.seed,
            self.version,
        )


@dataclass
class GradientTape:
    """Forward intermediates needed for the reverse pass."""

    params: NetworkParams | None = None
    version: int = -1
    inputs: list = field(default_factory=list)
    preacts: list = field(default_factory=list)
    aggregations: list = field(default_factory=list)
    output: np.ndarray | None = None


def default_stack(
    input_dim: int,
    hidden_dims=(500, 250),
    latent_dim: int = 200,
    activation: str = "leaky_relu",
    no_fca: bool = False,
    fca_variant: str = "gcn",
    self_loops: bool = True,
):
    """The four-layer architecture: FC(h1) -> FC(h2) -> FCA(h2) -> FC(latent).

    ``no_fca`` swaps the aggregation layer for a plain linear FC of the same
    dims (ablation switch).
    """
    dims = [input_dim, *hidden_dims]
    specs = [
        LayerSpec("fc", dims[i], dims[i + 1], activation) for i in range(len(dims) - 1)
    ]
    width = dims[-1]
    if no_fca:
        specs.append(LayerSpec("fc", width, width, "linear"))
    else:
        specs.append(
            LayerSpec("fca", width, width, fca_variant=fca_variant, self_loops=self_loops)
        )
    specs.append(LayerSpec("fc", width, latent_dim, "linear"))
    return tuple(specs)


def _check_chain(specs):
    if not specs:
        raise ValueError("empty layer spec")
    for a, b in zip(specs, specs[1:]):
        if a.out_dim != b.in_dim:
            raise ValueError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")


def init_network(specs, seed: int) -> NetworkParams:
    """Glorot-uniform weights, zero biases; deterministic given the seed."""
    specs = tuple(specs)
    _check_chain(specs)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for s in specs:
        limit = np.sqrt(6.0 / (s.in_dim + s.out_dim))
        weights.append(rng.uniform(-limit, limit, size=(s.in_dim, s.out_dim)))
        biases.append(np.zeros(s.out_dim))
    return NetworkParams(specs, weights, biases, seed)


def _activate(pre, activation):
    if activation == "linear":
        return pre
    if activation == "relu":
        return np.maximum(pre, 0.0)
    return np.where(pre > 0, pre, LEAKY_SLOPE * pre)


def _activate_grad(pre, activation):
    if activation == "linear":
        return np.ones_like(pre)
    if activation == "relu":
        return (pre > 0).astype(np.float64)
    return np.where(pre > 0, 1.0, LEAKY_SLOPE)


def aggregation_matrix(
    A, variant: str = "gcn", self_loops: bool = True
) -> sp.csr_matrix:
    """Sparse symmetric aggregation operator for an FCA layer.

    With self-loops the base matrix is A + I and its degree D; "gcn" returns
    D^(-1/2) (A+I) D^(-1/2), "verbatim" multiplies by the square-root degrees
    instead of dividing.  Zero-degree rows (only possible without self-loops)
    normalize to zero.
    """
    base = A.to_csr() if isinstance(A, AdjacencyMatrix) else sp.csr_matrix(A, dtype=np.float64)
    n = base.shape[0]
    if self_loops:
        base = (base + sp.identity(n, format="csr")).tocsr()
    deg = np.asarray(base.sum(axis=1)).ravel()
    if variant == "gcn":
        with np.errstate(divide="ignore"):
            scale = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
    else:
        scale = np.sqrt(deg)
    d_half = sp.diags(scale)
    return (d_half @ base @ d_half).tocsr()


def fc_forward(Z, W, B, activation: str = "linear"):
    """Affine map with optional elementwise activation: act(Z W + B)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape[1] != W.shape[0]:
        raise ValueError(f"shape mismatch: input {Z.shape} vs weight {W.shape}")
    return _activate(Z @ W + B, activation)


def fca_forward(Z, A, W, B, variant: str = "gcn", self_loops: bool = True):
    """Linear map followed by symmetric-normalized neighbor aggregation."""
    Z = np.asarray(Z, dtype=np.float64)
    N = A if sp.issparse(A) else aggregation_matrix(A, variant, self_loops)
    if N.shape[0] != Z.shape[0]:
        raise ValueError(f"adjacency is {N.shape} but input has {Z.shape[0]} rows")
    return N @ (Z @ W + B)


def forward(X, A, params: NetworkParams, tape: GradientTape | None = None):
    """Run the layer chain; record intermediates into ``tape`` if given.

    ``A`` may be an AdjacencyMatrix, a dense/sparse matrix, or a
    pre-normalized sparse aggregation operator; it is only consulted by fca
    layers and may be None for pure-FC stacks.
    """
    Z = np.asarray(X, dtype=np.float64)
    if tape is not None:
        tape.params = params
        tape.version = params.version
        tape.inputs = []
        tape.preacts = []
        tape.aggregations = []
    N_cache = None
    for spec, W, B in zip(params.specs, params.weights, params.biases):
        if tape is not None:
            tape.inputs.append(Z)
        if spec.kind == "fc":
            pre = Z @ W + B
            if tape is not None:
                tape.preacts.append(pre)
                tape.aggregations.append(None)
            Z = _activate(pre, spec.activation)
        else:
            if A is None:
                raise ValueError("fca layer requires an adjacency")
            if N_cache is None:
                if sp.issparse(A) and not isinstance(A, AdjacencyMatrix):
                    N_cache = A.tocsr()
                else:
                    N_cache = aggregation_matrix(A, spec.fca_variant, spec.self_loops)
            pre = Z @ W + B
            if tape is not None:
                tape.preacts.append(pre)
                tape.aggregations.append(N_cache)
            Z = N_cache @ pre
    if tape is not None:
        tape.output = Z
    return Z


def backward(tape: GradientTape, dLoss_dZ):
    """Exact reverse-mode gradients of the recorded forward pass.

    Returns ``(dW_list, dB_list)`` matching the parameter shapes.  Raises
    :class:`StaleTapeError` if the parameters were updated since recording.
    """
    params = tape.params
    if params is None or tape.output is None:
        raise StaleTapeError("tape holds no recorded forward pass")
    if tape.version != params.version:
        raise StaleTapeError(
            f"tape recorded at params version {tape.version}, now {params.version}"
        )
    g = np.asarray(dLoss_dZ, dtype=np.float64)
    if g.shape != tape.output.shape:
        raise ValueError(f"upstream gradient {g.shape} does not match output {tape.output.shape}")
    dW = [None] * len(params.specs)
    dB = [None] * len(params.specs)
    for l in range(len(params.specs) - 1, -1, -1):
        spec = params.specs[l]
        Z_in = tape.inputs[l]
        if spec.kind == "fca":
            # aggregation operator is symmetric, so N^T g = N g
            g_pre = tape.aggregations[l] @ g
        else:
            g_pre = g * _activate_grad(tape.preacts[l], spec.activation)
        dW[l] = Z_in.T @ g_pre
        dB[l] = g_pre.sum(axis=0)
        g = g_pre @ params.weights[l].T
    return dW, dB
