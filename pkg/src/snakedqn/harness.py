"""Training and evaluation orchestration, metrics logging, memory report.

The training loop is the standard cycle: act, step the game, preprocess
the new frame, store the transition, maybe learn, maybe sync the target
network. One CSV row is appended per finished episode. Seeding is fanned
out from a single master seed, so a fixed seed makes whole runs
bit-reproducible.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import env as game
from .agent import (
    AgentState,
    Hyperparams,
    N_ACTIONS,
    epsilon_at,
    greedy_action,
    learn_step,
    load_agent,
    maybe_sync_target,
    new_agent,
    save_agent,
    select_action,
)
from .preprocess import (
    PixelFormat,
    binary_observation,
    frame_bytes,
    stack_init,
    stack_push,
)
from .replay import FRAMES_PER_EXPERIENCE, Experience, ReplayBuffer, memory_report

CSV_HEADER = "episode,score,cumulative_reward,discounted_return,steps,epsilon,mean_loss,frames_total"


@dataclass
class TrainConfig:
    hp: Hyperparams = field(default_factory=Hyperparams)
    episodes: int = 140_000
    seed: int = 0
    metrics_path: str = "metrics.csv"
    checkpoint_path: str = "checkpoint.bin"
    checkpoint_every: int = 1_000
    deterministic: bool = True
    eval_epsilon: float = 0.0
    max_frames: int | None = None  # optional global frame cap, mainly for tests
    resume_from: str | None = None

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")


@dataclass(frozen=True)
class EpisodeMetrics:
    episode: int
    score: int
    cumulative_reward: float
    discounted_return: float
    steps: int
    epsilon: float
    mean_loss: float
    frames_total: int

    def csv_row(self) -> str:
        return ",".join([
            str(self.episode),
            str(self.score),
            repr(self.cumulative_reward),
            repr(self.discounted_return),
            str(self.steps),
            repr(self.epsilon),
            repr(self.mean_loss),
            str(self.frames_total),
        ])


@dataclass(frozen=True)
class EvalResult:
    scores: list[int]
    mean: float
    best: int


def observe(state: game.EnvState):
    return binary_observation(game.render_rgb(state))


def run_episode(state: game.EnvState, agent: AgentState, buffer: ReplayBuffer,
                hp: Hyperparams, frame_budget: int | None = None,
                collect_events: bool = False):
    """Play one episode with learning; returns (summary dict, events or None).

    ``frame_budget`` caps how many frames this episode may consume; hitting
    the cap abandons the episode mid-flight (summary is marked incomplete).
    """
    stack = stack_init(observe(state))
    cumulative = 0.0
    discounted = 0.0
    gamma_t = 1.0
    losses: list[float] = []
    events: list[tuple[game.StepEvent, float]] | None = [] if collect_events else None
    used = 0
    while not state.done:
        if frame_budget is not None and used >= frame_budget:
            return {"complete": False, "frames_used": used, "state": state}, events
        action = select_action(stack, agent, hp)
        state, outcome = game.step(state, game.ACTIONS[action])
        agent.frame_count += 1
        used += 1
        next_stack = stack_push(stack, observe(state))
        buffer.push(Experience(stack, action, outcome.reward, next_stack,
                               outcome.terminal))
        loss = learn_step(agent, buffer, hp)
        if loss is not None:
            losses.append(loss)
        maybe_sync_target(agent, hp)
        stack = next_stack
        cumulative += outcome.reward
        discounted += gamma_t * outcome.reward
        gamma_t *= hp.gamma
        if events is not None:
            events.append((outcome.event, outcome.reward))
    summary = {
        "complete": True,
        "frames_used": used,
        "state": state,
        "score": state.score,
        "cumulative_reward": cumulative,
        "discounted_return": discounted,
        "steps": state.steps,
        "mean_loss": float(np.mean(losses)) if losses else math.nan,
    }
    return summary, events


def train(config: TrainConfig) -> list[EpisodeMetrics]:
    """Run the training loop; writes the metrics CSV and checkpoints."""
    hp = config.hp
    grid = game.GridConfig(max_steps=hp.max_step)
    master = np.random.SeedSequence(config.seed)
    agent_ss, env_ss = master.spawn(2)
    if config.resume_from is not None:
        agent = load_agent(config.resume_from, hp,
                           rng=np.random.Generator(np.random.PCG64(agent_ss.spawn(1)[0])))
    else:
        agent = new_agent(hp, agent_ss)
    env_seeder = np.random.Generator(np.random.PCG64(env_ss))
    buffer = ReplayBuffer(hp.replay_capacity)

    metrics: list[EpisodeMetrics] = []
    # Opening the sink up front surfaces unwritable paths before any work.
    with open(config.metrics_path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for episode in range(config.episodes):
            if config.max_frames is not None and agent.frame_count >= config.max_frames:
                break
            seed_ep = int(env_seeder.integers(0, 2**63))
            state = game.reset(grid, seed_ep)
            budget = None
            if config.max_frames is not None:
                budget = config.max_frames - agent.frame_count
            summary, _ = run_episode(state, agent, buffer, hp, frame_budget=budget)
            if not summary["complete"]:
                break
            row = EpisodeMetrics(
                episode=episode,
                score=summary["score"],
                cumulative_reward=summary["cumulative_reward"],
                discounted_return=summary["discounted_return"],
                steps=summary["steps"],
                epsilon=epsilon_at(agent.frame_count, hp),
                mean_loss=summary["mean_loss"],
                frames_total=agent.frame_count,
            )
            metrics.append(row)
            fh.write(row.csv_row() + "\n")
            fh.flush()
            if config.checkpoint_path and (episode + 1) % config.checkpoint_every == 0:
                save_agent(config.checkpoint_path, agent, hp)
    if config.checkpoint_path:
        save_agent(config.checkpoint_path, agent, hp)
    return metrics


def evaluate(source, episodes: int = 50, epsilon: float = 0.0, seed: int = 0,
             hp: Hyperparams | None = None,
             grid: game.GridConfig | None = None) -> EvalResult:
    """Play greedy (or epsilon-soft) episodes without learning.

    ``source`` may be an AgentState, a QNetwork, a checkpoint path, or None
    for a pure random policy (requires epsilon = 1).
    """
    hp = hp or Hyperparams()
    grid = grid or game.GridConfig(max_steps=hp.max_step)
    net = source
    if isinstance(source, AgentState):
        net = source.online
    elif isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        net = load_agent(source, hp).online
    if net is None and epsilon < 1.0:
        raise ValueError("a network is required unless epsilon = 1")

    master = np.random.SeedSequence(seed)
    act_ss, env_ss = master.spawn(2)
    rng = np.random.Generator(np.random.PCG64(act_ss))
    env_seeder = np.random.Generator(np.random.PCG64(env_ss))
    n_actions = net.n_outputs if net is not None else N_ACTIONS

    scores: list[int] = []
    for _ in range(episodes):
        state = game.reset(grid, int(env_seeder.integers(0, 2**63)))
        stack = stack_init(observe(state))
        while not state.done:
            action = greedy_action(stack, net, rng, epsilon, n_actions)
            state, _ = game.step(state, game.ACTIONS[action])
            stack = stack_push(stack, observe(state))
        scores.append(state.score)
    return EvalResult(scores=scores, mean=float(np.mean(scores)), best=max(scores))


def random_policy_mean(episodes: int = 1_000, seed: int = 0,
                       grid: game.GridConfig | None = None,
                       hp: Hyperparams | None = None) -> float:
    """Measured mean score of the uniform-random policy (the learning floor)."""
    return evaluate(None, episodes=episodes, epsilon=1.0, seed=seed,
                    hp=hp, grid=grid).mean


def _trunc(value: float, decimals: int) -> str:
    scale = 10**decimals
    return f"{math.floor(value * scale) / scale:.{decimals}f}"


def _pct(saving: float) -> str:
    text = f"{saving * 100:.3f}".rstrip("0").rstrip(".")
    return f"{text}%"


def memreport_text() -> str:
    """Both memory tables: per-frame sizes and replay-buffer accounting."""
    rgb = frame_bytes(PixelFormat.RGB_FLOAT64)
    gray = frame_bytes(PixelFormat.GRAY_FLOAT64)
    binary = frame_bytes(PixelFormat.BINARY_BYTE)
    packed = frame_bytes(PixelFormat.BINARY_PACKED)

    lines = ["Per-frame storage (84x84 observation)"]
    lines.append(f"{'format':<16}{'bytes':>10}{'kB':>10}{'vs RGB':>10}{'vs gray':>10}")
    rows = [
        ("RGB float64", rgb),
        ("Gray float64", gray),
        ("Binary byte", binary),
        ("Binary packed", packed),
    ]
    for label, nbytes in rows:
        vs_rgb = _pct(1 - nbytes / rgb)
        vs_gray = _pct(1 - nbytes / gray) if nbytes <= gray else "-"
        lines.append(
            f"{label:<16}{nbytes:>10}{_trunc(nbytes / 1024, 3):>10}{vs_rgb:>10}{vs_gray:>10}"
        )

    lines.append("")
    lines.append(f"Replay memory accounting ({FRAMES_PER_EXPERIENCE} frames per experience)")
    lines.append(f"{'buffer':<28}{'bytes':>16}{'GB':>10}{'vs RGB':>10}{'vs gray':>10}")
    rgb_b, rgb_gb = memory_report(1_000_000, PixelFormat.RGB_FLOAT64)
    gray_b, gray_gb = memory_report(1_000_000, PixelFormat.GRAY_FLOAT64)
    bin_b, bin_gb = memory_report(50_000, PixelFormat.BINARY_BYTE)
    for label, nbytes, gb in [
        ("RGB float64 x 1,000,000", rgb_b, rgb_gb),
        ("Gray float64 x 1,000,000", gray_b, gray_gb),
        ("Binary byte x 50,000", bin_b, bin_gb),
    ]:
        vs_rgb = _pct(1 - nbytes / rgb_b)
        vs_gray = _pct(1 - nbytes / gray_b) if nbytes <= gray_b else "-"
        lines.append(f"{label:<28}{nbytes:>16}{_trunc(gb, 3):>10}{vs_rgb:>10}{vs_gray:>10}")
    return "\n".join(lines) + "\n"


_HP_FIELDS = {f.name: f.type for f in dataclasses.fields(Hyperparams)}

_INT_KEYS = {
    "batch_size", "max_step", "random_frames", "eps_greedy_frames",
    "replay_capacity", "update_every", "target_sync_every",
    "episodes", "seed", "checkpoint_every", "max_frames",
}
_FLOAT_KEYS = {"gamma", "eps_initial", "eps_final", "learning_rate",
               "clip_norm", "eval_epsilon"}
_BOOL_KEYS = {"deterministic"}
_STR_KEYS = {"metrics_path", "checkpoint_path", "resume_from"}


def parse_config_file(path) -> TrainConfig:
    """Flat ``key = value`` file -> TrainConfig. Unknown keys are errors."""
    hp_kwargs: dict = {}
    tc_kwargs: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                if key in _INT_KEYS:
                    parsed = int(value)
                elif key in _FLOAT_KEYS:
                    parsed = float(value)
                elif key in _BOOL_KEYS:
                    if value.lower() not in {"true", "false", "1", "0", "yes", "no"}:
                        raise ValueError(f"bad boolean {value!r}")
                    parsed = value.lower() in {"true", "1", "yes"}
                elif key in _STR_KEYS:
                    parsed = value
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if key in _HP_FIELDS:
                hp_kwargs[key] = parsed
            else:
                tc_kwargs[key] = parsed
    return TrainConfig(hp=Hyperparams(**hp_kwargs), **tc_kwargs)
