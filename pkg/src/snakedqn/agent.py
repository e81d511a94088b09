"""DQN decision making and learning on top of the numpy network engine.

Two networks: the online network is trained by Adam on clipped TD
gradients; the target network is a frozen copy refreshed every
``target_sync_every`` frames and used only for Bellman targets. All
schedules count environment frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .checkpoint import CheckpointError, read_records, write_records
from .nn import QNetwork, build_q_network, copy_weights, init_weights
from .optim import AdamState, adam_step, clip_global_norm, init_adam
from .replay import Experience, ReplayBuffer

N_ACTIONS = 4


@dataclass(frozen=True)
class Hyperparams:
    gamma: float = 0.99
    eps_initial: float = 1.0
    eps_final: float = 0.01
    batch_size: int = 32
    max_step: int = 10_000
    learning_rate: float = 0.0025
    clip_norm: float = 1.0
    random_frames: int = 50_000
    eps_greedy_frames: int = 500_000
    replay_capacity: int = 50_000
    update_every: int = 4
    target_sync_every: int = 10_000

    def __post_init__(self):
        numeric = {
            "gamma": self.gamma,
            "eps_initial": self.eps_initial,
            "eps_final": self.eps_final,
            "batch_size": self.batch_size,
            "max_step": self.max_step,
            "learning_rate": self.learning_rate,
            "clip_norm": self.clip_norm,
            "eps_greedy_frames": self.eps_greedy_frames,
            "replay_capacity": self.replay_capacity,
            "update_every": self.update_every,
            "target_sync_every": self.target_sync_every,
        }
        for name, value in numeric.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.random_frames < 0:
            raise ValueError("random_frames must be non-negative")
        if not (self.eps_final <= self.eps_initial <= 1.0):
            raise ValueError("need eps_final <= eps_initial <= 1")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")


@dataclass
class AgentState:
    online: QNetwork
    target: QNetwork
    adam: AdamState
    frame_count: int
    rng: np.random.Generator


def new_agent(hp: Hyperparams, seed, n_actions: int = N_ACTIONS,
              dtype=np.float32) -> AgentState:
    """Fresh agent: seeded weights, target synced to online, Adam at step 0."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    init_ss, act_ss = ss.spawn(2)
    online = build_q_network(n_actions, dtype=dtype)
    init_weights(online, np.random.Generator(np.random.PCG64(init_ss)))
    target = build_q_network(n_actions, dtype=dtype)
    copy_weights(online, target)
    return AgentState(
        online=online,
        target=target,
        adam=init_adam(online.params()),
        frame_count=0,
        rng=np.random.Generator(np.random.PCG64(act_ss)),
    )


def epsilon_at(frame: int, hp: Hyperparams) -> float:
    """Exploration rate: 1.0 during warmup, then linear decay to the floor."""
    if frame < 0:
        raise ValueError("frame must be non-negative")
    if frame < hp.random_frames:
        return 1.0
    t = frame - hp.random_frames
    if t >= hp.eps_greedy_frames:
        return hp.eps_final
    frac = t / hp.eps_greedy_frames
    return hp.eps_initial + (hp.eps_final - hp.eps_initial) * frac


def greedy_action(stack, net: QNetwork | None, rng: np.random.Generator,
                  epsilon: float, n_actions: int = N_ACTIONS) -> int:
    """Epsilon-soft action: random below epsilon, else argmax of eval Q-values."""
    if rng.random() < epsilon:
        return int(rng.integers(0, n_actions))
    q = net.forward(stack.to_input(net.dtype)[None], train=False)[0]
    return int(np.argmax(q))


def select_action(stack, agent: AgentState, hp: Hyperparams) -> int:
    eps = epsilon_at(agent.frame_count, hp)
    return greedy_action(stack, agent.online, agent.rng, eps,
                         agent.online.n_outputs)


def _batch_inputs(stacks, dtype) -> np.ndarray:
    return np.stack([s.to_input(dtype) for s in stacks])


def compute_targets(batch: list[Experience], target_net: QNetwork,
                    gamma: float) -> np.ndarray:
    """Bellman targets: y = r, or r + gamma * max_a' Q'(s', a') when non-terminal."""
    rewards = np.array([e.reward for e in batch], dtype=np.float64)
    terminal = np.array([e.terminal for e in batch])
    y = rewards.copy()
    live = ~terminal
    if live.any():
        nxt = _batch_inputs([e.next_state for e in batch if not e.terminal],
                            target_net.dtype)
        q_next = target_net.forward(nxt, train=False)
        y[live] += gamma * q_next.max(axis=1).astype(np.float64)
    return y


def td_loss_and_gradient(batch: list[Experience], targets: np.ndarray,
                         online: QNetwork) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared TD error; gradient flows only through taken actions."""
    if len(batch) != len(targets):
        raise ValueError("batch and targets must have equal length")
    n = len(batch)
    actions = np.array([e.action for e in batch])
    x = _batch_inputs([e.state for e in batch], online.dtype)
    q = online.forward(x, train=True)
    taken = q[np.arange(n), actions]
    diff = np.asarray(targets, dtype=np.float64) - taken.astype(np.float64)
    loss = float(np.mean(diff**2))
    dq = np.zeros_like(q)
    dq[np.arange(n), actions] = (-2.0 * diff / n).astype(q.dtype)
    grads = online.backward(dq)
    return loss, grads


def learn_step(agent: AgentState, buffer: ReplayBuffer,
               hp: Hyperparams) -> float | None:
    """One scheduled gradient update; returns the loss, or None off-schedule."""
    if agent.frame_count < hp.random_frames:
        return None
    if agent.frame_count % hp.update_every != 0:
        return None
    if len(buffer) < hp.batch_size:
        return None
    batch = buffer.sample(hp.batch_size, agent.rng)
    targets = compute_targets(batch, agent.target, hp.gamma)
    loss, grads = td_loss_and_gradient(batch, targets, agent.online)
    grads = clip_global_norm(grads, hp.clip_norm)
    adam_step(agent.online.params(), grads, agent.adam, hp.learning_rate)
    return loss


def maybe_sync_target(agent: AgentState, hp: Hyperparams) -> None:
    if agent.frame_count % hp.target_sync_every == 0:
        copy_weights(agent.online, agent.target)


def save_agent(path, agent: AgentState, hp: Hyperparams) -> None:
    """Write networks, Adam moments, and schedule counters to one file."""
    records: dict[str, np.ndarray] = {}
    records["meta/n_actions"] = np.int64(agent.online.n_outputs)
    for name, arr in agent.online.state_arrays().items():
        records[f"online/{name}"] = arr
    for name, arr in agent.target.state_arrays().items():
        records[f"target/{name}"] = arr
    for name, arr in agent.adam.m.items():
        records[f"adam/m/{name}"] = arr
    for name, arr in agent.adam.v.items():
        records[f"adam/v/{name}"] = arr
    records["adam/t"] = np.int64(agent.adam.t)
    records["frame_count"] = np.int64(agent.frame_count)
    records["eps_frames"] = np.int64(max(0, agent.frame_count - hp.random_frames))
    write_records(path, records)


def load_agent(path, hp: Hyperparams,
               rng: np.random.Generator | None = None) -> AgentState:
    """Rebuild an agent from a checkpoint; a fresh rng is seeded unless given."""
    records = read_records(path)
    try:
        n_actions = int(records["meta/n_actions"])
    except KeyError as exc:
        raise CheckpointError("missing record meta/n_actions") from exc
    agent = new_agent(hp, seed=0, n_actions=n_actions)
    if rng is not None:
        agent.rng = rng

    def fill(prefix: str, arrays: dict[str, np.ndarray]) -> None:
        for name, arr in arrays.items():
            key = f"{prefix}{name}"
            if key not in records:
                raise CheckpointError(f"missing record {key}")
            stored = records[key]
            if stored.shape != arr.shape:
                raise CheckpointError(
                    f"architecture mismatch at {key}: {stored.shape} vs {arr.shape}")
            np.copyto(arr, stored)

    fill("online/", agent.online.state_arrays())
    fill("target/", agent.target.state_arrays())
    fill("adam/m/", agent.adam.m)
    fill("adam/v/", agent.adam.v)
    agent.adam.t = int(records.get("adam/t", np.int64(0)))
    agent.frame_count = int(records.get("frame_count", np.int64(0)))
    return agent
