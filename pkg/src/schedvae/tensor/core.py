"""Tensors and the recording tape used for reverse-mode differentiation.

Operations record onto the innermost active :class:`Tape`. With no tape
active nothing is recorded, which is how evaluation and generation run.
Recording order is a valid topological order, so the backward pass simply
walks the recorded nodes in reverse.
"""

from __future__ import annotations

from typing import Callable, ClassVar, Sequence

import numpy as np


class TapeError(RuntimeError):
    pass


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "_from_op", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._from_op = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # operator sugar; implementations live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from . import ops
        return ops.getitem(self, index)


class Parameter(Tensor):
    """A trainable leaf tensor."""

    __slots__ = ()

    def __init__(self, data, name: str = ""):
        super().__init__(np.array(data), requires_grad=True, name=name)


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    return Tensor(arr)


class _Node:
    __slots__ = ("outs", "inputs", "backward")

    def __init__(self, outs, inputs, backward):
        self.outs = outs
        self.inputs = inputs
        self.backward = backward


class Tape:
    """Records differentiable operations for a single backward pass."""

    _stack: ClassVar[list["Tape"]] = []

    def __init__(self):
        self.nodes: list[_Node] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, *exc):
        Tape._stack.remove(self)
        return False

    @classmethod
    def current(cls) -> "Tape | None":
        return cls._stack[-1] if cls._stack else None

    def backward(self, loss: Tensor) -> None:
        """Populate ``.grad`` on every leaf reachable from ``loss``.

        Leaf gradients accumulate across calls on different tapes; clear them
        with the optimizer between steps.
        """
        if self.consumed:
            raise TapeError("tape already consumed by backward(); run forward again")
        if loss.size != 1:
            raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        self.consumed = True
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            gouts = [grads.pop(id(o), None) for o in node.outs]
            if all(g is None for g in gouts):
                continue
            gouts = [
                np.zeros_like(o.data) if g is None else g for g, o in zip(gouts, node.outs)
            ]
            gins = node.backward(*gouts)
            for inp, g in zip(node.inputs, gins):
                if g is None or not isinstance(inp, Tensor) or not inp.requires_grad:
                    continue
                if g.shape != inp.shape:
                    raise ShapeError(
                        f"gradient shape {g.shape} does not match input {inp.shape}"
                    )
                if inp._from_op:
                    prev = grads.get(id(inp))
                    grads[id(inp)] = g if prev is None else prev + g
                else:
                    inp.grad = g.astype(inp.dtype, copy=False) if inp.grad is None else inp.grad + g
        self.nodes.clear()


def record(
    outs: Tensor | Sequence[Tensor],
    inputs: Sequence,
    backward: Callable[..., Sequence[np.ndarray | None]],
) -> None:
    """Register ``outs`` as produced from ``inputs`` on the active tape.

    ``backward`` receives one upstream gradient per output and returns one
    gradient (or ``None``) per input.
    """
    tape = Tape.current()
    if tape is None:
        return
    if not any(isinstance(t, Tensor) and t.requires_grad for t in inputs):
        return
    outs = (outs,) if isinstance(outs, Tensor) else tuple(outs)
    for o in outs:
        o.requires_grad = True
        o._from_op = True
    tape.nodes.append(_Node(outs, tuple(inputs), backward))


def backward(tape: Tape, loss: Tensor) -> None:
    tape.backward(loss)
