"""Differentiable building blocks for the recurrent Q-network.

One gated recurrent (long short-term memory) cell followed by a dense head
mapping the final hidden state to one Q-value per action. Forward, backward
(backpropagation through time), Huber loss, Adam, and finite-difference
gradient checking are all implemented directly on numpy arrays.

Gate weights are stored as single combined matrices whose columns split into
four equal blocks, in order: input gate, forget gate, candidate, output gate.
"""

from __future__ import annotations

import zipfile
from dataclasses import dataclass

import numpy as np

# Observation components are scaled to O(1) before entering the network.
POSITION_SCALE = 1.0e7
VELOCITY_SCALE = 1.0e4


class CheckpointError(ValueError):
    """A parameter checkpoint could not be read or failed validation."""


@dataclass(frozen=True)
class QNetworkParams:
    """Recurrent-cell and head weights shared by online and target networks.

    Attributes:
        w_x: (obs_dim, 4*hidden) input-to-gates weights.
        w_h: (hidden, 4*hidden) hidden-to-gates weights.
        b: (4*hidden,) gate biases.
        w_head: (hidden, n_actions) dense head weights.
        b_head: (n_actions,) dense head bias.
    """

    w_x: np.ndarray
    w_h: np.ndarray
    b: np.ndarray
    w_head: np.ndarray
    b_head: np.ndarray

    def __post_init__(self) -> None:
        hidden = self.w_h.shape[0]
        if self.w_h.shape != (hidden, 4 * hidden):
            raise ValueError(f"w_h must be (hidden, 4*hidden), got {self.w_h.shape}")
        if self.w_x.ndim != 2 or self.w_x.shape[1] != 4 * hidden:
            raise ValueError(f"w_x must be (obs_dim, {4 * hidden}), got {self.w_x.shape}")
        if self.b.shape != (4 * hidden,):
            raise ValueError(f"b must be ({4 * hidden},), got {self.b.shape}")
        if self.w_head.ndim != 2 or self.w_head.shape[0] != hidden:
            raise ValueError(f"w_head must be (hidden, n_actions), got {self.w_head.shape}")
        if self.b_head.shape != (self.w_head.shape[1],):
            raise ValueError(f"b_head must match w_head columns, got {self.b_head.shape}")
        for name, value in self.fields():
            if not np.all(np.isfinite(value)):
                raise ValueError(f"parameter {name} contains non-finite values")

    @property
    def obs_dim(self) -> int:
        return self.w_x.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[0]

    @property
    def n_actions(self) -> int:
        return self.w_head.shape[1]

    def fields(self) -> tuple[tuple[str, np.ndarray], ...]:
        return (
            ("w_x", self.w_x),
            ("w_h", self.w_h),
            ("b", self.b),
            ("w_head", self.w_head),
            ("b_head", self.b_head),
        )

    def copy(self) -> "QNetworkParams":
        return QNetworkParams(**{name: value.copy() for name, value in self.fields()})

    def map(self, fn, *others: "QNetworkParams") -> "QNetworkParams":
        """Apply fn element-wise across matching tensors of self and others."""
        return QNetworkParams(
            **{
                name: fn(value, *(getattr(other, name) for other in others))
                for name, value in self.fields()
            }
        )

    @classmethod
    def zeros_like(cls, params: "QNetworkParams") -> "QNetworkParams":
        return params.map(np.zeros_like)


@dataclass(frozen=True)
class RecurrentState:
    """Hidden and cell activations carried between steps."""

    hidden: np.ndarray
    cell: np.ndarray


@dataclass(frozen=True)
class OptimizerState:
    """Adam moment accumulators and the shared step counter."""

    first_moment: QNetworkParams
    second_moment: QNetworkParams
    step: int = 0


def init_params(
    obs_dim: int, hidden_size: int, n_actions: int, rng: np.random.Generator
) -> QNetworkParams:
    """Weights uniform in +-1/sqrt(fan_in); biases zero."""
    if obs_dim < 1 or hidden_size < 1 or n_actions < 1:
        raise ValueError("obs_dim, hidden_size and n_actions must be positive")

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    return QNetworkParams(
        w_x=uniform((obs_dim, 4 * hidden_size), obs_dim),
        w_h=uniform((hidden_size, 4 * hidden_size), hidden_size),
        b=np.zeros(4 * hidden_size),
        w_head=uniform((hidden_size, n_actions), hidden_size),
        b_head=np.zeros(n_actions),
    )


def init_recurrent_state(hidden_size: int) -> RecurrentState:
    return RecurrentState(hidden=np.zeros(hidden_size), cell=np.zeros(hidden_size))


def init_optimizer_state(params: QNetworkParams) -> OptimizerState:
    return OptimizerState(
        first_moment=QNetworkParams.zeros_like(params),
        second_moment=QNetworkParams.zeros_like(params),
        step=0,
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def recurrent_step(x: np.ndarray, state: RecurrentState, params: QNetworkParams) -> RecurrentState:
    """One gated-cell update for a single observation vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (params.obs_dim,):
        raise ValueError(f"input shape {x.shape} does not match obs_dim {params.obs_dim}")
    if state.hidden.shape != (params.hidden_size,):
        raise ValueError(
            f"state size {state.hidden.shape} does not match hidden_size {params.hidden_size}"
        )
    hidden = params.hidden_size
    pre = x @ params.w_x + state.hidden @ params.w_h + params.b
    gate_in = _sigmoid(pre[:hidden])
    gate_forget = _sigmoid(pre[hidden : 2 * hidden])
    candidate = np.tanh(pre[2 * hidden : 3 * hidden])
    gate_out = _sigmoid(pre[3 * hidden :])
    cell = gate_forget * state.cell + gate_in * candidate
    return RecurrentState(hidden=gate_out * np.tanh(cell), cell=cell)


def q_head(hidden: np.ndarray, params: QNetworkParams) -> np.ndarray:
    """Dense head mapping a hidden state to one Q-value per action."""
    return hidden @ params.w_head + params.b_head


def q_forward(
    obs_sequence: np.ndarray, params: QNetworkParams
) -> tuple[np.ndarray, RecurrentState]:
    """Q-values after folding the cell over a sequence from a zero state.

    Args:
        obs_sequence: (T, obs_dim) array or equivalent list of vectors.

    Returns:
        (q_values (n_actions,), final RecurrentState).
    """
    obs = np.asarray(obs_sequence, dtype=float)
    if obs.ndim == 1:
        obs = obs[None, :]
    if obs.shape[0] == 0:
        raise ValueError("obs_sequence must be non-empty")
    state = init_recurrent_state(params.hidden_size)
    for t in range(obs.shape[0]):
        state = recurrent_step(obs[t], state, params)
    return q_head(state.hidden, params), state


def forward_batch(
    obs: np.ndarray, mask: np.ndarray, params: QNetworkParams
) -> tuple[np.ndarray, list]:
    """Masked batched forward pass with per-step cache for the backward pass.

    Args:
        obs: (batch, T, obs_dim). Rows may be zero-padded where inactive.
        mask: (batch, T) booleans; the state passes through unchanged at
            inactive steps, so a row's active suffix behaves like a shorter
            sequence.

    Returns:
        (q_values (batch, n_actions), cache list consumed by backward_batch).
    """
    obs = np.asarray(obs, dtype=float)
    batch, steps, obs_dim = obs.shape
    if obs_dim != params.obs_dim:
        raise ValueError(f"obs feature size {obs_dim} does not match obs_dim {params.obs_dim}")
    hidden = params.hidden_size
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    mask = np.asarray(mask, dtype=float).reshape(batch, steps, 1)
    cache = []
    for t in range(steps):
        x = obs[:, t, :]
        pre = x @ params.w_x + h @ params.w_h + params.b
        gate_in = _sigmoid(pre[:, :hidden])
        gate_forget = _sigmoid(pre[:, hidden : 2 * hidden])
        candidate = np.tanh(pre[:, 2 * hidden : 3 * hidden])
        gate_out = _sigmoid(pre[:, 3 * hidden :])
        c_new = gate_forget * c + gate_in * candidate
        tanh_c = np.tanh(c_new)
        h_new = gate_out * tanh_c
        m = mask[:, t, :]
        cache.append((x, h, c, gate_in, gate_forget, candidate, gate_out, tanh_c, m))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
    cache.append(h)
    return h @ params.w_head + params.b_head, cache


def huber_loss(a, delta: float = 1.0):
    """0.5*a^2 inside |a| <= delta, delta*(|a| - delta/2) outside."""
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    a = np.asarray(a, dtype=float)
    abs_a = np.abs(a)
    out = np.where(abs_a <= delta, 0.5 * a * a, delta * (abs_a - 0.5 * delta))
    return float(out) if out.ndim == 0 else out


def _huber_grad(a: np.ndarray, delta: float) -> np.ndarray:
    return np.where(np.abs(a) <= delta, a, delta * np.sign(a))


def backward_batch(
    params: QNetworkParams,
    obs: np.ndarray,
    mask: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
    delta: float = 1.0,
) -> tuple[float, QNetworkParams]:
    """Mean Huber TD loss over a batch and its parameter gradients.

    The loss is mean_b Huber(q_b[action_b] - target_b, delta) with q taken at
    each row's final (masked) step.
    """
    q, cache = forward_batch(obs, mask, params)
    batch = q.shape[0]
    actions = np.asarray(actions, dtype=int)
    targets = np.asarray(targets, dtype=float)
    diff = q[np.arange(batch), actions] - targets
    loss = float(np.mean(huber_loss(diff, delta)))

    dq = np.zeros_like(q)
    dq[np.arange(batch), actions] = _huber_grad(diff, delta) / batch

    h_final = cache[-1]
    grad_w_head = h_final.T @ dq
    grad_b_head = dq.sum(axis=0)
    dh = dq @ params.w_head.T
    dc = np.zeros_like(dh)
    grad_w_x = np.zeros_like(params.w_x)
    grad_w_h = np.zeros_like(params.w_h)
    grad_b = np.zeros_like(params.b)

    for t in range(len(cache) - 2, -1, -1):
        x, h_prev, c_prev, gate_in, gate_forget, candidate, gate_out, tanh_c, m = cache[t]
        dh_here = dh * m
        dc_here = dc * m
        d_out = dh_here * tanh_c
        dc_total = dc_here + dh_here * gate_out * (1.0 - tanh_c * tanh_c)
        d_in = dc_total * candidate
        d_candidate = dc_total * gate_in
        d_forget = dc_total * c_prev
        d_pre = np.concatenate(
            [
                d_in * gate_in * (1.0 - gate_in),
                d_forget * gate_forget * (1.0 - gate_forget),
                d_candidate * (1.0 - candidate * candidate),
                d_out * gate_out * (1.0 - gate_out),
            ],
            axis=1,
        )
        grad_w_x += x.T @ d_pre
        grad_w_h += h_prev.T @ d_pre
        grad_b += d_pre.sum(axis=0)
        # Inactive rows pass gradients straight through to the previous step.
        dh = (1.0 - m) * dh + d_pre @ params.w_h.T
        dc = (1.0 - m) * dc + dc_total * gate_forget

    grads = QNetworkParams(
        w_x=grad_w_x, w_h=grad_w_h, b=grad_b, w_head=grad_w_head, b_head=grad_b_head
    )
    return loss, grads


def backward(
    obs_sequence: np.ndarray,
    action_taken: int,
    td_target: float,
    params: QNetworkParams,
    delta: float = 1.0,
) -> QNetworkParams:
    """Gradients of Huber(q[action_taken] - td_target) for one sequence."""
    obs = np.asarray(obs_sequence, dtype=float)
    if obs.ndim == 1:
        obs = obs[None, :]
    mask = np.ones((1, obs.shape[0]), dtype=bool)
    _, grads = backward_batch(
        params, obs[None, :, :], mask, np.array([action_taken]), np.array([td_target]), delta
    )
    return grads


def finite_difference_gradients(
    params: QNetworkParams,
    obs_sequence: np.ndarray,
    action_taken: int,
    td_target: float,
    delta: float = 1.0,
    epsilon: float = 1e-5,
) -> QNetworkParams:
    """Central-difference gradients of the same scalar loss as backward().

    Forward-only, so it serves as an independent oracle for the analytic
    backward pass. Cost scales with the parameter count; intended for small
    networks.
    """

    def loss_with(p: QNetworkParams) -> float:
        q, _ = q_forward(obs_sequence, p)
        return float(huber_loss(q[action_taken] - td_target, delta))

    arrays = {name: value.copy() for name, value in params.fields()}
    grads = {}
    for name in arrays:
        flat = arrays[name].reshape(-1)
        grad = np.zeros_like(flat)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + epsilon
            up = loss_with(QNetworkParams(**arrays))
            flat[k] = original - epsilon
            down = loss_with(QNetworkParams(**arrays))
            flat[k] = original
            grad[k] = (up - down) / (2.0 * epsilon)
        grads[name] = grad.reshape(arrays[name].shape)
    return QNetworkParams(**grads)


def adam_step(
    params: QNetworkParams,
    grads: QNetworkParams,
    opt_state: OptimizerState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[QNetworkParams, OptimizerState]:
    """Bias-corrected adaptive-moment update; returns new params and state."""
    step = opt_state.step + 1
    new_m = opt_state.first_moment.map(lambda m, g: beta1 * m + (1.0 - beta1) * g, grads)
    new_v = opt_state.second_moment.map(lambda v, g: beta2 * v + (1.0 - beta2) * g * g, grads)
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step

    def update(p, m, v):
        m_hat = m / correction1
        v_hat = v / correction2
        return p - lr * m_hat / (np.sqrt(v_hat) + eps)

    new_params = params.map(update, new_m, new_v)
    return new_params, OptimizerState(first_moment=new_m, second_moment=new_v, step=step)


def save_params(path, params: QNetworkParams) -> None:
    """Write a checkpoint; the container stores each tensor with its shape
    header followed by row-major values, so round trips are bit-exact."""
    with open(path, "wb") as fh:
        np.savez(fh, **{name: value for name, value in params.fields()})


_PARAM_NAMES = ("w_x", "w_h", "b", "w_head", "b_head")


def load_params(path) -> QNetworkParams:
    """Read a checkpoint written by save_params.

    Raises:
        CheckpointError: unreadable file, missing tensors, or bad shapes.
    """
    try:
        with np.load(path) as data:
            missing = [name for name in _PARAM_NAMES if name not in data.files]
            if missing:
                raise CheckpointError(f"checkpoint is missing tensors: {', '.join(missing)}")
            arrays = {name: np.array(data[name], dtype=float) for name in _PARAM_NAMES}
    except CheckpointError:
        raise
    except (OSError, ValueError, KeyError, zipfile.BadZipFile, EOFError) as exc:
        raise CheckpointError(f"could not read checkpoint {path}: {exc}") from exc
    try:
        return QNetworkParams(**arrays)
    except ValueError as exc:
        raise CheckpointError(f"checkpoint {path} failed validation: {exc}") from exc
