"""Reverse-mode automatic differentiation over dense float64 tensors.

Define-by-run: while a Tape is active, every primitive records its output
node; `backward` replays the records in reverse creation order (which is a
topological order by construction). Broadcasting is limited to scalars and
row-vector biases; everything else must match shapes exactly, which keeps
silent bugs out of a hand-built engine.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidShapeError

_ACTIVE_TAPE: list = [None]


class Tensor:
    """A dense float64 array with an optional gradient buffer."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._parents: tuple = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad}{tag})"


class Tape:
    """Ordered record of the primitives applied while the tape was active."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self):
        if _ACTIVE_TAPE[0] is not None:
            raise InvalidInputError("a tape is already active; tapes do not nest")
        _ACTIVE_TAPE[0] = self
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPE[0] = None
        return False


def tensor(data, requires_grad: bool = False, name: str = "") -> Tensor:
    return Tensor(data, requires_grad=requires_grad, name=name)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def _emit(data, parents, backward_fn) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad and _ACTIVE_TAPE[0] is not None:
        out._parents = tuple(parents)
        out._backward = backward_fn
        _ACTIVE_TAPE[0].nodes.append(out)
    return out


def _accum(t: Tensor, g: np.ndarray):
    if t.requires_grad:
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad += g


# ---------------------------------------------------------------------------
# primitives

def _binary_shapes(op: str, a: Tensor, b: Tensor):
    """Allowed: identical shapes, scalar on either side, or (N, K) op (K,)."""
    if a.shape == b.shape:
        return "same"
    if b.data.ndim == 0:
        return "bscalar"
    if a.data.ndim == 0:
        return "ascalar"
    if a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:
        return "bias"
    raise InvalidShapeError(op, f"incompatible shapes {a.shape} and {b.shape}")


def _reduce_to(g: np.ndarray, mode: str, side: str) -> np.ndarray:
    if mode == "same" or (mode == "bscalar" and side == "a") or (mode == "ascalar" and side == "b"):
        return g
    if mode in ("bscalar", "ascalar"):
        return g.sum()
    if mode == "bias":
        return g if side == "a" else g.sum(axis=0)
    raise AssertionError(mode)


def add(a: Tensor, b: Tensor) -> Tensor:
    mode = _binary_shapes("add", a, b)

    def backward(g):
        _accum(a, _reduce_to(g, mode, "a"))
        _accum(b, _reduce_to(g, mode, "b"))

    return _emit(a.data + b.data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    mode = _binary_shapes("sub", a, b)

    def backward(g):
        _accum(a, _reduce_to(g, mode, "a"))
        _accum(b, -_reduce_to(g, mode, "b"))

    return _emit(a.data - b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    mode = _binary_shapes("mul", a, b)

    def backward(g):
        _accum(a, _reduce_to(g * b.data, mode, "a"))
        _accum(b, _reduce_to(g * a.data, mode, "b"))

    return _emit(a.data * b.data, (a, b), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    mode = _binary_shapes("div", a, b)

    def backward(g):
        _accum(a, _reduce_to(g / b.data, mode, "a"))
        _accum(b, _reduce_to(-g * a.data / (b.data * b.data), mode, "b"))

    return _emit(a.data / b.data, (a, b), backward)


def mul_scalar(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def backward(g):
        _accum(a, g * c)

    return _emit(a.data * c, (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise InvalidShapeError("matmul", f"incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _emit(a.data @ b.data, (a, b), backward)


def concat(tensors, axis: int) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise InvalidShapeError("concat", "no inputs")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _accum(t, g[tuple(sl)])

    return _emit(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g):
        _accum(a, g * mask)

    return _emit(np.where(mask, a.data, 0.0), (a,), backward)


def hinge(a: Tensor) -> Tensor:
    """max(x, 0); zero subgradient at the kink."""
    return relu(a)


def softplus(a: Tensor) -> Tensor:
    sig = 1.0 / (1.0 + np.exp(-np.abs(a.data)))
    sig = np.where(a.data >= 0, sig, 1.0 - sig)

    def backward(g):
        _accum(a, g * sig)

    return _emit(np.logaddexp(0.0, a.data), (a,), backward)


def square(a: Tensor) -> Tensor:
    def backward(g):
        _accum(a, 2.0 * a.data * g)

    return _emit(a.data * a.data, (a,), backward)


def sqrt(a: Tensor) -> Tensor:
    root = np.sqrt(a.data)

    def backward(g):
        _accum(a, g / (2.0 * root))

    return _emit(root, (a,), backward)


def reduce_sum(a: Tensor, axis: int | None = None) -> Tensor:
    def backward(g):
        if axis is None:
            _accum(a, np.full_like(a.data, g))
        else:
            _accum(a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())

    return _emit(a.data.sum(axis=axis), (a,), backward)


def reduce_max(a: Tensor, axis: int | None = None) -> Tensor:
    """Max along an axis. On ties the gradient routes to the first maximal
    element, a deterministic subgradient choice."""
    if axis is None:
        flat_idx = int(np.argmax(a.data))

        def backward(g):
            buf = np.zeros_like(a.data)
            buf.reshape(-1)[flat_idx] = g
            _accum(a, buf)

        return _emit(a.data.max(), (a,), backward)

    idx = np.argmax(a.data, axis=axis)

    def backward(g):
        buf = np.zeros_like(a.data)
        np.put_along_axis(buf, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
        _accum(a, buf)

    return _emit(a.data.max(axis=axis), (a,), backward)


def l2_normalize(a: Tensor, axis: int) -> Tensor:
    norm = np.linalg.norm(a.data, axis=axis, keepdims=True)
    safe = np.maximum(norm, 1e-300)
    y = a.data / safe

    def backward(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        _accum(a, (g - y * dot) / safe)

    return _emit(y, (a,), backward)


def gather(a: Tensor, indices) -> Tensor:
    """Select rows along axis 0; duplicate indices accumulate gradient."""
    idx = np.asarray(indices, dtype=np.int64)

    def backward(g):
        buf = np.zeros_like(a.data)
        np.add.at(buf, idx, g)
        _accum(a, buf)

    return _emit(a.data[idx], (a,), backward)


def reshape(a: Tensor, shape) -> Tensor:
    def backward(g):
        _accum(a, g.reshape(a.data.shape))

    return _emit(a.data.reshape(shape), (a,), backward)


# ---------------------------------------------------------------------------
# backward pass

def backward(tape: Tape, loss: Tensor) -> None:
    """Populate .grad with dLoss/dTensor for every requires_grad tensor
    reachable from `loss` through the tape."""
    if loss.data.ndim != 0:
        raise InvalidInputError(f"loss must be scalar, got shape {loss.data.shape}")
    touched = set()
    for node in tape.nodes:
        touched.add(id(node))
        node.zero_grad()
        for p in node._parents:
            if p.requires_grad and id(p) not in touched:
                touched.add(id(p))
                p.zero_grad()
    if id(loss) not in touched:
        loss.zero_grad()
    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape.nodes):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class AdamState:
    """Per-parameter first/second moment buffers plus the step counter."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place. Parameters with a missing
    gradient are treated as zero-gradient."""
    state.step += 1
    t = state.step
    for name in sorted(params):
        p = params[name]
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        mhat = m / (1.0 - state.beta1 ** t)
        vhat = v / (1.0 - state.beta2 ** t)
        p.data -= lr * mhat / (np.sqrt(vhat) + state.eps)


# ---------------------------------------------------------------------------
# gradient checking

@dataclass
class GradCheckEntry:
    name: str
    max_rel_error: float
    checked: int


@dataclass
class GradCheckReport:
    entries: list[GradCheckEntry]
    tol: float

    @property
    def max_rel_error(self) -> float:
        return max((e.max_rel_error for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol

    def summary(self) -> str:
        lines = [f"{'PASS' if e.max_rel_error < self.tol else 'FAIL'}  "
                 f"{e.name:<30s} max_rel_err={e.max_rel_error:.3e} ({e.checked} entries)"
                 for e in self.entries]
        lines.append(f"overall max relative error {self.max_rel_error:.3e} "
                     f"(tolerance {self.tol:.1e}): {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def grad_check(function, inputs: list[Tensor], h: float = 1e-5, tol: float = 1e-4,
               max_entries_per_tensor: int | None = None, seed: int = 0,
               floor: float = 1e-4) -> GradCheckReport:
    """Compare analytic gradients of a scalar-valued `function` against
    central finite differences.

    Relative error per entry is |a - n| / max(|a|, |n|, floor); the floor
    turns the comparison absolute for near-zero gradients, where finite
    differences are dominated by roundoff.
    """
    with Tape() as tape:
        out = function(inputs)
    if out.data.ndim != 0:
        raise InvalidInputError("grad_check requires a scalar-valued function")
    backward(tape, out)
    analytic = [inp.grad.copy() if inp.grad is not None else np.zeros_like(inp.data)
                for inp in inputs]

    rng = np.random.default_rng(seed)
    entries = []
    for inp, ana in zip(inputs, analytic):
        flat = inp.data.reshape(-1)
        n = flat.size
        if max_entries_per_tensor is None or n <= max_entries_per_tensor:
            picks = np.arange(n)
        else:
            picks = rng.choice(n, size=max_entries_per_tensor, replace=False)
            picks.sort()
        worst = 0.0
        for j in picks:
            orig = flat[j]
            flat[j] = orig + h
            fp = float(function(inputs).data)
            flat[j] = orig - h
            fm = float(function(inputs).data)
            flat[j] = orig
            numeric = (fp - fm) / (2.0 * h)
            a = float(ana.reshape(-1)[j])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, rel)
        entries.append(GradCheckEntry(inp.name or f"input{len(entries)}", worst, len(picks)))
    return GradCheckReport(entries, tol)
