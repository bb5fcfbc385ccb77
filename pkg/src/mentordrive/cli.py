"""Command line front end. Batch work (train, eval, verification, exports)
runs in-process for determinism; `serve` and `replay` host the web service."""
from __future__ import annotations

import sys

import click
import numpy as np

from .expert import ExpertConfig, estimate_epsilon, estimate_kappa
from .harness import (
    EVAL_SEED_BASE,
    RunConfig,
    export_platoon_trace,
    load_policy_checkpoint,
    load_run_config,
    run_eval,
    run_train,
)
from .theory import verify_bound


def _load_config(path: str | None) -> RunConfig:
    return load_run_config(path) if path else RunConfig()


@click.group()
def main() -> None:
    """Mentored-driving training and tooling."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="run config YAML; defaults apply if omitted")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def train(config_path: str | None, seed: int, out_dir: str) -> None:
    """Train with the scripted mentor, writing metrics and a checkpoint."""
    cfg = _load_config(config_path)
    paths = run_train(cfg, seed, out_dir)
    click.echo(f"metrics: {paths['metrics']}")
    click.echo(f"checkpoint: {paths['checkpoint']}")


@main.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None)
@click.option("--episodes", type=int, default=20)
@click.option("--seed-base", type=int, default=EVAL_SEED_BASE)
@click.option("--force", is_flag=True,
              help="skip the scenario hash check")
def eval_cmd(checkpoint: str, config_path: str | None, episodes: int,
             seed_base: int, force: bool) -> None:
    """Roll out the deterministic policy head with no mentor."""
    cfg = _load_config(config_path)
    policy, _ = load_policy_checkpoint(checkpoint, cfg.scenario, force=force)
    report = run_eval(policy, cfg.scenario, episodes, seed_base)
    click.echo(f"success_rate        {report.success_rate:.4f}")
    click.echo(f"return_mean         {report.return_mean:.4f}")
    click.echo(f"return_sd           {report.return_sd:.4f}")
    click.echo(f"safety_violation    {report.safety_violation:.4f}")
    click.echo(f"disturbance_rate    {report.disturbance_rate:.6f}")
    click.echo(f"episodes            {report.episodes}")


@main.command("verify-theory")
@click.option("--mdps", type=int, default=20)
@click.option("--seed", type=int, default=0)
@click.option("--gamma", type=float, default=0.9)
def verify_theory(mdps: int, seed: int, gamma: float) -> None:
    """Check the risk bound on random tabular MDPs; nonzero exit on any
    violation."""
    report = verify_bound(n_mdps=mdps, seed=seed, gamma=gamma)
    click.echo(report.render())


@main.command("expert-stats")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None)
@click.option("--episodes", type=int, default=50)
@click.option("--seed", type=int, default=3)
@click.option("--mode", type=click.Choice(["dense", "sparse"]),
              default="dense")
def expert_stats(config_path: str | None, episodes: int, seed: int,
                 mode: str) -> None:
    """Measure the scripted mentor's per-step error rates."""
    cfg = _load_config(config_path)
    ecfg = ExpertConfig(mode=mode)
    eps = estimate_epsilon(cfg.scenario, ecfg, episodes, seed)
    rng = np.random.default_rng(seed)

    def random_agent(obs):
        return (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))

    kap = estimate_kappa(cfg.scenario, random_agent, ecfg, episodes, seed)
    for s in (eps, kap):
        click.echo(f"{s.kind:8s} rate={s.rate:.6f} events={s.events} "
                   f"steps={s.steps} episodes={s.episodes} "
                   f"ci95=[{s.ci_low:.6f}, {s.ci_high:.6f}]")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--seed", type=int, default=0)
@click.option("--pace", type=float, default=0.1,
              help="seconds per frame; 0 = unpaced")
def serve(config_path: str | None, host: str, port: int, seed: int,
          pace: float) -> None:
    """Host the live driving session for the cockpit client."""
    import uvicorn

    from .service import create_app
    app = create_app(_load_config(config_path), seed=seed, pace=pace)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True),
              required=True)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--pace", type=float, default=0.1)
def replay(log_path: str, host: str, port: int, pace: float) -> None:
    """Host a recorded episode for the replay viewer."""
    import uvicorn

    from .service import create_app
    app = create_app(replay_log=log_path, pace=pace)
    uvicorn.run(app, host=host, port=port)


@main.command("export-trace")
@click.option("--checkpoint", type=click.Path(exists=True), default=None,
              help="policy checkpoint; the scripted mentor drives if omitted")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--force", is_flag=True)
def export_trace(checkpoint: str | None, config_path: str | None, seed: int,
                 out_path: str, force: bool) -> None:
    """Export one episode as a per-vehicle time series CSV."""
    cfg = _load_config(config_path)
    policy = None
    if checkpoint:
        policy, _ = load_policy_checkpoint(checkpoint, cfg.scenario,
                                           force=force)
    path = export_platoon_trace(policy, cfg.scenario, seed, out_path)
    click.echo(path)


if __name__ == "__main__":
    sys.exit(main())
