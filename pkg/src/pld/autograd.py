"""Dense float32 tensors with reverse-mode differentiation.

The op set is exactly what the distinction network needs: 3D cross-correlation,
nearest-neighbor upsampling, relu, sigmoid and mean squared error. Each op
returns a new `Tensor` that remembers its parents and how to push a gradient
back to them; `backward` walks the recorded graph from a scalar loss and
accumulates into every `Parameter` it reaches.

Values are immutable once created (only the training loop mutates `Parameter`
data, and only through the optimizer). Everything is float32, C-order.
"""

import numpy as np
from numpy.lib.stride_tricks import as_strided


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class Tensor:
    """A dense float32 array, possibly an interior node of an op graph.

    `data` is the row-major numpy array; `_parents` / `_backward` are set only
    on op results. `_backward(grad)` returns one gradient array per parent.
    """

    __slots__ = ("data", "_parents", "_backward")

    def __init__(self, data, _parents=(), _backward=None):
        self.data = np.ascontiguousarray(data, dtype=np.float32)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


class Parameter(Tensor):
    """A trainable leaf: value plus a persistent gradient buffer.

    `grad` always has the value's shape. Backward passes accumulate into it;
    it is cleared only by `zero_grads`.
    """

    __slots__ = ("grad", "name")

    def __init__(self, data, name: str = ""):
        super().__init__(data)
        self.grad = np.zeros_like(self.data)
        self.name = name

    def __repr__(self):
        return f"Parameter({self.name or 'unnamed'}, shape={self.data.shape})"


def zero_grads(params) -> None:
    for p in params:
        p.grad[...] = 0.0


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(param) into every Parameter reachable from `loss`.

    `loss` must be a single-element tensor. Calling backward twice without
    `zero_grads` adds the new gradients onto the old ones.
    """
    if loss.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Parameter):
            node.grad += g
            continue
        if node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            key = id(parent)
            if key in grads:
                grads[key] += pg
            else:
                grads[key] = pg


def _triple(v, what: str) -> tuple[int, int, int]:
    if isinstance(v, int):
        v = (v, v, v)
    t = tuple(int(x) for x in v)
    if len(t) != 3:
        raise ShapeError(f"{what} must have 3 components, got {v!r}")
    return t


def _conv_cols(xp: np.ndarray, kernel, stride, out_dims) -> np.ndarray:
    """im2col for a padded (Cin, T, H, W) volume -> (Cin*kT*kH*kW, To*Ho*Wo)."""
    cin = xp.shape[0]
    kt, kh, kw = kernel
    st, sh, sw = stride
    to, ho, wo = out_dims
    sc, s0, s1, s2 = xp.strides
    view = as_strided(
        xp,
        shape=(cin, kt, kh, kw, to, ho, wo),
        strides=(sc, s0, s1, s2, s0 * st, s1 * sh, s2 * sw),
        writeable=False,
    )
    return np.ascontiguousarray(view).reshape(cin * kt * kh * kw, to * ho * wo)


def conv3d(x: Tensor, weight: Tensor, bias=None, stride=1, padding=0) -> Tensor:
    """3D cross-correlation of (Cin,T,H,W) with (Cout,Cin,kT,kH,kW) plus bias.

    Output extent per axis is floor((n + 2*pad - k) / stride) + 1; the kernel
    must fit inside the padded input.
    """
    if x.data.ndim != 4:
        raise ShapeError(f"conv3d input must be (Cin,T,H,W), got {x.shape}")
    if weight.data.ndim != 5:
        raise ShapeError(f"conv3d weight must be (Cout,Cin,kT,kH,kW), got {weight.shape}")
    cin = x.shape[0]
    cout, wcin = weight.shape[0], weight.shape[1]
    if wcin != cin:
        raise ShapeError(f"conv3d: input has {cin} channels, weight expects {wcin}")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"conv3d bias must be ({cout},), got {bias.shape}")
    stride = _triple(stride, "stride")
    padding = _triple(padding, "padding")
    if min(stride) < 1:
        raise ShapeError(f"conv3d stride components must be >= 1, got {stride}")
    if min(padding) < 0:
        raise ShapeError(f"conv3d padding components must be >= 0, got {padding}")

    kernel = weight.shape[2:]
    in_dims = x.shape[1:]
    out_dims = []
    for n, k, s, p in zip(in_dims, kernel, stride, padding):
        if n + 2 * p < k:
            raise ShapeError(
                f"conv3d kernel {kernel} does not fit padded input {in_dims} (pad {padding})"
            )
        out_dims.append((n + 2 * p - k) // s + 1)
    to, ho, wo = out_dims

    pt, ph, pw = padding
    xp = np.pad(x.data, ((0, 0), (pt, pt), (ph, ph), (pw, pw)))
    cols = _conv_cols(xp, kernel, stride, out_dims)
    w2d = weight.data.reshape(cout, -1)
    out = (w2d @ cols).reshape(cout, to, ho, wo)
    if bias is not None:
        out = out + bias.data[:, None, None, None]

    def grad_fn(g):
        g2d = g.reshape(cout, -1)
        gw = (g2d @ cols.T).reshape(weight.shape)
        gcols = w2d.T @ g2d
        gxp = np.zeros_like(xp)
        gc = gcols.reshape(cin, *kernel, to, ho, wo)
        st, sh, sw = stride
        for kt in range(kernel[0]):
            for kh in range(kernel[1]):
                for kw in range(kernel[2]):
                    gxp[
                        :,
                        kt : kt + to * st : st,
                        kh : kh + ho * sh : sh,
                        kw : kw + wo * sw : sw,
                    ] += gc[:, kt, kh, kw]
        t, h, w = in_dims
        gx = np.ascontiguousarray(gxp[:, pt : pt + t, ph : ph + h, pw : pw + w])
        if bias is None:
            return gx, gw
        return gx, gw, g.sum(axis=(1, 2, 3))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor(out, parents, grad_fn)


def upsample3d_nearest(x: Tensor, factors) -> Tensor:
    """Replicate each voxel of a (C,T,H,W) volume by integer factors per axis."""
    if x.data.ndim != 4:
        raise ShapeError(f"upsample3d_nearest input must be (C,T,H,W), got {x.shape}")
    ft, fh, fw = _triple(factors, "factors")
    if min(ft, fh, fw) < 1:
        raise ShapeError(f"upsample factors must be >= 1, got {(ft, fh, fw)}")
    out = np.repeat(np.repeat(np.repeat(x.data, ft, axis=1), fh, axis=2), fw, axis=3)

    c, t, h, w = x.shape

    def grad_fn(g):
        blocks = g.reshape(c, t, ft, h, fh, w, fw)
        return (blocks.sum(axis=(2, 4, 6)),)

    return Tensor(out, (x,), grad_fn)


def relu(x: Tensor) -> Tensor:
    out = np.maximum(x.data, 0.0)

    def grad_fn(g):
        return (g * (x.data > 0.0),)

    return Tensor(out, (x,), grad_fn)


# Largest float32 strictly below 1; keeps sigmoid outputs inside the open
# interval even when the input saturates.
_SIG_LO = np.float32(np.finfo(np.float32).tiny)
_SIG_HI = np.float32(1.0) - np.float32(np.finfo(np.float32).epsneg)


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ex = np.exp(d[~pos])
    out[~pos] = ex / (1.0 + ex)
    np.clip(out, _SIG_LO, _SIG_HI, out=out)

    def grad_fn(g):
        return (g * out * (1.0 - out),)

    return Tensor(out, (x,), grad_fn)


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean over all elements of the squared difference, as a scalar tensor."""
    if pred.shape != target.shape:
        raise ShapeError(f"mse_loss shapes differ: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    n = diff.size
    loss = np.float32((diff.astype(np.float64) ** 2).mean())

    def grad_fn(g):
        scale = g * np.float32(2.0 / n)
        gd = scale * diff
        return gd, -gd

    return Tensor(loss, (pred, target), grad_fn)
