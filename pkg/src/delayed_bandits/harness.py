"""Experiment runner: configs, presets, episodes, batches, coverage checks.

A single episode wires one environment, one policy, and per-run random
streams derived from ``base_seed + run_index``. Batches are share-nothing
across replications and aggregate in run-id order, so serial and parallel
execution produce identical results.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .delays import (
    DelayDistribution,
    EmpiricalDelay,
    FixedDelay,
    GeometricDelay,
    LognormalDelay,
    load_empirical,
    recommended_window,
)
from .environment import (
    ActionSet,
    ConversionEvent,
    DelayedBanditEnv,
    generate_action_set,
    make_hard_instance_pair,
)
from .estimator import WindowedEstimator
from .policies import PolicyConfig, make_policy

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RegretTrace",
    "SummaryStats",
    "PRESETS",
    "apply_preset",
    "build_config",
    "run_episode",
    "run_batch",
    "summarize",
    "concentration_coverage",
    "elliptical_potential_bound",
    "CONFIG_DEFAULTS",
]

THETA_KINDS = ("uniform_unit", "explicit", "k_armed_hard")
ACTION_MODES = ("resample_each_round", "fixed_basis")
DELAY_KINDS = ("geometric", "fixed", "empirical", "lognormal")


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 1)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully describes one experiment; every field has a usable default."""

    d: int = 5
    K: int = 10
    T: int = 3000
    theta: str = "uniform_unit"
    theta_values: Optional[tuple] = None
    hard_gap: float = 0.1
    hard_arm: int = 2
    action_mode: str = "resample_each_round"
    delay: str = "geometric"
    delay_mean: float = 100.0
    delay_value: int = 0
    delay_path: Optional[str] = None
    delay_scale: float = 1.0
    delay_log_mean: float = 7.0
    delay_log_std: float = 1.2
    policy: str = "otf_linucb"
    delta: float = 0.05
    lam: float = 1.0
    m: Optional[int] = None
    width_mode: str = "cached"
    width_scale: float = 0.2
    n_runs: int = 100
    base_seed: int = 0
    output_path: str = "results"
    n_jobs: int = 1

    def validate(self) -> None:
        if self.d < 1 or self.K < 1 or self.T < 1 or self.n_runs < 1:
            raise ConfigError("d, K, T and n_runs must all be >= 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be non-negative")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")
        if self.theta not in THETA_KINDS:
            raise ConfigError(f"unknown theta kind {self.theta!r}")
        if self.action_mode not in ACTION_MODES:
            raise ConfigError(f"unknown action mode {self.action_mode!r}")
        if self.delay not in DELAY_KINDS:
            raise ConfigError(f"unknown delay kind {self.delay!r}")
        if self.action_mode == "fixed_basis" and self.K != self.d:
            raise ConfigError("fixed_basis mode requires K == d")
        if self.theta == "k_armed_hard" and self.action_mode != "fixed_basis":
            raise ConfigError("k_armed_hard theta requires fixed_basis mode")
        if self.m is not None and self.m < 0:
            raise ConfigError("window m must be >= 0")
        try:
            self.build_delay()
            self.resolve_theta()
            self.policy_config()
        except ConfigError:
            raise
        except (ValueError, OSError) as exc:
            raise ConfigError(str(exc)) from exc

    def build_delay(self) -> DelayDistribution:
        if self.delay == "geometric":
            return GeometricDelay(self.delay_mean)
        if self.delay == "fixed":
            return FixedDelay(self.delay_value)
        if self.delay == "empirical":
            if self.delay_path is None:
                raise ConfigError("empirical delay requires delay_path")
            return load_empirical(self.delay_path, self.delay_scale)
        return LognormalDelay(self.delay_log_mean, self.delay_log_std)

    def resolve_theta(self) -> np.ndarray:
        if self.theta == "uniform_unit":
            return np.full(self.d, 1.0 / math.sqrt(self.d))
        if self.theta == "explicit":
            if self.theta_values is None:
                raise ConfigError("explicit theta requires theta_values")
            vec = np.asarray(self.theta_values, dtype=float)
            if vec.shape != (self.d,):
                raise ConfigError(
                    f"theta_values has length {vec.size}, expected d={self.d}"
                )
            if np.linalg.norm(vec) > 1.0 + 1e-9:
                raise ConfigError("explicit theta must have L2 norm <= 1")
            return vec
        # the hard-instance parameter intentionally escapes the unit ball
        # for larger K; only per-action means must stay in [0, 1]
        theta, _ = make_hard_instance_pair(self.K, self.hard_gap, self.hard_arm)
        return theta

    def resolved_window(self) -> int:
        if self.m is not None:
            return self.m
        return recommended_window(self.build_delay())

    def tau_m(self) -> float:
        return self.build_delay().cdf(self.resolved_window())

    def policy_config(self) -> PolicyConfig:
        try:
            return PolicyConfig(kind=self.policy, delta=self.delta, lam=self.lam,
                                m=self.resolved_window(), width_mode=self.width_mode,
                                width_scale=self.width_scale)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def resolved_items(self) -> list:
        """Every resolved setting as (key, value) pairs for the metadata file."""
        items = [
            ("d", self.d), ("K", self.K), ("T", self.T),
            ("theta", self.theta),
        ]
        if self.theta == "explicit":
            items.append(("theta_values", ",".join(repr(v) for v in self.theta_values)))
        if self.theta == "k_armed_hard":
            items += [("hard_gap", self.hard_gap), ("hard_arm", self.hard_arm)]
        items += [("action_mode", self.action_mode), ("delay", self.delay)]
        if self.delay == "geometric":
            items.append(("delay_mean", self.delay_mean))
        elif self.delay == "fixed":
            items.append(("delay_value", self.delay_value))
        elif self.delay == "empirical":
            items += [("delay_path", self.delay_path), ("delay_scale", self.delay_scale)]
        else:
            items += [("delay_log_mean", self.delay_log_mean),
                      ("delay_log_std", self.delay_log_std)]
        items += [
            ("policy", self.policy), ("delta", self.delta), ("lambda", self.lam),
            ("m", self.resolved_window()), ("width_mode", self.width_mode),
            ("width_scale", self.width_scale),
            ("n_runs", self.n_runs), ("base_seed", self.base_seed),
            ("n_jobs", self.n_jobs), ("out", self.output_path),
        ]
        return items


@dataclass
class RegretTrace:
    """Cumulative pseudo-regret of one episode, one value per round."""

    run_id: int
    cum_regret: np.ndarray
    elliptical_potential: float = float("nan")


@dataclass
class SummaryStats:
    """Across-run per-round mean/std and final-regret quantiles."""

    mean: np.ndarray
    std: np.ndarray
    final_quantiles: dict
    n_runs: int


# Scenario presets. A, B and C use geometric delays with d=5, K=10, T=3000
# and windows (100, 500, 100) against mean delays (100, 100, 500); D is the
# heavy-tailed scenario with a lognormal delay, a 2000-round window and a
# 10^4 horizon.
PRESETS: dict = {
    "A": dict(d=5, K=10, T=3000, delay="geometric", delay_mean=100.0, m=100),
    "B": dict(d=5, K=10, T=3000, delay="geometric", delay_mean=100.0, m=500),
    "C": dict(d=5, K=10, T=3000, delay="geometric", delay_mean=500.0, m=100),
    "D": dict(d=5, K=10, T=10_000, delay="lognormal", delay_log_mean=7.0,
              delay_log_std=1.2, m=2000),
}


def apply_preset(config: ExperimentConfig, name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (expected one of A, B, C, D)")
    return replace(config, **PRESETS[name])


CONFIG_DEFAULTS = ExperimentConfig()

_INT_KEYS = {"d", "K", "T", "hard_arm", "delay_value", "n_runs", "base_seed", "n_jobs"}
_FLOAT_KEYS = {"hard_gap", "delay_mean", "delay_scale", "delay_log_mean",
               "delay_log_std", "delta", "lambda", "width_scale"}
_STR_KEYS = {"theta", "action_mode", "delay", "delay_path", "policy",
             "width_mode", "out"}


def build_config(values: dict, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Turn a flat string-to-string mapping into a validated config.

    Unknown keys are rejected. ``m`` accepts an integer or the literal
    ``auto`` (twice the mean delay, rounded up).
    """
    config = base if base is not None else ExperimentConfig()
    updates: dict = {}
    for key, raw in values.items():
        raw = str(raw).strip()
        try:
            if key in _INT_KEYS:
                updates[key] = int(raw)
            elif key in _FLOAT_KEYS:
                updates["lam" if key == "lambda" else key] = float(raw)
            elif key == "m":
                updates[key] = None if raw == "auto" else int(raw)
            elif key == "theta_values":
                updates[key] = tuple(float(v) for v in raw.split(",") if v.strip())
            elif key in _STR_KEYS:
                updates["output_path" if key == "out" else key] = raw
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc
    config = replace(config, **updates)
    config.validate()
    return config


def elliptical_potential_bound(d: int, lam: float, T: int) -> float:
    """Deterministic cap on the summed squared pre-update action norms."""
    return 2.0 * d * math.log((d * lam + T) / (d * lam))


def _episode_streams(base_seed: int, run_index: int):
    ss = np.random.SeedSequence(base_seed + run_index)
    env_ss, policy_ss = ss.spawn(2)
    return np.random.default_rng(env_ss), np.random.default_rng(policy_ss)


def run_episode(config: ExperimentConfig, run_index: int) -> RegretTrace:
    """Play one full episode; deterministic given (config, run_index)."""
    env_rng, policy_rng = _episode_streams(config.base_seed, run_index)
    theta = config.resolve_theta()
    env = DelayedBanditEnv(theta, config.build_delay(), env_rng)
    policy = make_policy(config.policy_config(), config.d, horizon=config.T)
    fixed_set = ActionSet(np.eye(config.d)) if config.action_mode == "fixed_basis" else None

    # The elliptical-potential diagnostic needs the pre-update norm of each
    # chosen action under a design matrix seeded with lam * I. Policies that
    # maintain exactly that matrix provide it for free; otherwise track one.
    policy_est = getattr(policy, "est", None)
    if policy_est is not None and policy_est.lam == config.lam:
        tracker = None
    else:
        tracker = WindowedEstimator(config.d, config.lam, m=0)

    trace = np.empty(config.T)
    cum = 0.0
    potential = 0.0
    for t in range(1, config.T + 1):
        aset = fixed_set if fixed_set is not None else generate_action_set(
            env_rng, config.d, config.K)
        idx = policy.select(aset, policy_rng)
        chosen = aset.actions[idx]
        if tracker is None:
            potential += policy_est.mahalanobis_norm(chosen) ** 2
        else:
            potential += tracker.mahalanobis_norm(chosen) ** 2
            tracker.record_action(chosen)
        events = env.step(idx, aset)
        if policy.needs_uncensored_feedback:
            events = [ConversionEvent(t)] if env.last_reward else []
        policy.observe(events, chosen)
        cum += env.instantaneous_regret(chosen, aset)
        trace[t - 1] = cum
    return RegretTrace(run_id=run_index, cum_regret=trace,
                       elliptical_potential=potential)


def _episode_worker(args) -> RegretTrace:
    config, run_index = args
    return run_episode(config, run_index)


def summarize(traces: list) -> SummaryStats:
    """Order-independent aggregation over a batch of traces."""
    traces = sorted(traces, key=lambda tr: tr.run_id)
    stacked = np.stack([tr.cum_regret for tr in traces])
    finals = stacked[:, -1]
    quantiles = {f"q{int(100 * q)}": float(np.quantile(finals, q))
                 for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
    return SummaryStats(mean=stacked.mean(axis=0), std=stacked.std(axis=0, ddof=0),
                        final_quantiles=quantiles, n_runs=len(traces))


def run_batch(config: ExperimentConfig) -> tuple[list, SummaryStats]:
    """Run ``n_runs`` independent episodes, serially or in worker processes."""
    config.validate()
    indices = range(config.n_runs)
    if config.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            traces = list(pool.map(_episode_worker,
                                   [(config, i) for i in indices], chunksize=1))
    else:
        traces = [run_episode(config, i) for i in indices]
    traces.sort(key=lambda tr: tr.run_id)
    return traces, summarize(traces)


def concentration_coverage(config: ExperimentConfig, n_reps: int) -> float:
    """Fraction of replications whose estimate stays inside its ellipsoid.

    One action sequence is drawn up front from ``base_seed`` and held
    fixed; each replication redraws rewards and delays only, then checks
    at every selection time that the windowed estimate deviates from the
    window-scaled true parameter (in the design-matrix norm) by no more
    than the exact-mode confidence width. Coverage counts replications
    where the check holds simultaneously for all rounds.
    """
    config.validate()
    if n_reps < 1:
        raise ConfigError("n_reps must be >= 1")
    theta = config.resolve_theta()
    delay = config.build_delay()
    m = config.resolved_window()
    tau = delay.cdf(m)
    target = tau * theta

    seq_rng = np.random.default_rng(np.random.SeedSequence(config.base_seed))
    actions = np.empty((config.T, config.d))
    fixed_set = ActionSet(np.eye(config.d)) if config.action_mode == "fixed_basis" else None
    for t in range(config.T):
        aset = fixed_set if fixed_set is not None else generate_action_set(
            seq_rng, config.d, config.K)
        actions[t] = aset.actions[int(seq_rng.integers(len(aset)))]
    means = actions @ theta
    if means.min() < -1e-9 or means.max() > 1.0 + 1e-9:
        raise ConfigError("mean reward out of range [0, 1] for coverage sequence")

    hits = 0
    for rep in range(n_reps):
        rng = np.random.default_rng(np.random.SeedSequence(config.base_seed + 1 + rep))
        est = WindowedEstimator(config.d, config.lam, m)
        reveal: dict[int, list[int]] = {}
        ok = True
        for t in range(1, config.T + 1):
            err = est.estimate() - target
            lhs = math.sqrt(max(float(err @ est.V @ err), 0.0))
            if lhs > est.confidence_width(config.delta, "exact"):
                ok = False
                break
            a = actions[t - 1]
            est.record_action(a)
            if rng.random() < means[t - 1]:
                reveal.setdefault(t + delay.sample(rng), []).append(t)
            for s in reveal.pop(t, []):
                est.record_conversion(s)
        hits += ok
    return hits / n_reps
