"""Command-line entry point tying the pipeline together.

Subcommands: gen-data, train-disc, train-policy, plan, eval, stats, serve.
Every artifact-producing subcommand is deterministic per seed, so reruns
with identical flags produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import mcts, nn
from .datagen import build_dataset, format_stats_table, read_disc_ndjson, read_rl_ndjson, write_disc_ndjson, write_rl_ndjson
from .discriminator import DiscConfig, threshold_sweep, train_discriminator
from .evaluation import format_report_table, run_benchmark
from .policy import IQLConfig, train_iql
from .templates import load_library
from .world import load_scene, scene_to_dict

SWEEP_THRESHOLDS = np.round(np.linspace(0.05, 0.95, 19), 2)


def _fmt(v) -> str:
    return f"{float(v):.10g}"


def _write_csv(path: Path, header: str, rows: list[str]) -> None:
    path.write_text("\n".join([header, *rows]) + "\n")


def _cmd_gen_data(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    library = load_library()
    disc, rl, report = build_dataset(library, args.trajectories_per_template, args.T, args.seed)
    write_disc_ndjson(disc, out / "disc.ndjson")
    write_rl_ndjson(rl, out / "rl.ndjson")
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"wrote {len(disc)} discriminator records, {len(rl)} transitions to {out}")
    return 0


def _cmd_stats(args) -> int:
    report = json.loads((Path(args.data) / "report.json").read_text())
    print(format_stats_table(report))
    return 0


def _cmd_train_disc(args) -> int:
    records = read_disc_ndjson(Path(args.data) / "disc.ndjson")
    config = DiscConfig(epochs=args.epochs, lr=args.lr, seed=args.seed)
    params, log = train_discriminator(records, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    nn.save_checkpoint(out / "discriminator.ckpt", params, rng_seed=args.seed, step=args.epochs)
    rows = [
        f"{epoch},{_fmt(tr)},{_fmt(log.validation_loss[epoch]) if log.validation_loss else ''}"
        for epoch, tr in enumerate(log.train_loss)
    ]
    _write_csv(out / "loss.csv", "epoch,train_loss,validation_loss", rows)
    held_out = [r for r in records if r.split == "validation"] or records
    sweep = threshold_sweep(params, held_out, SWEEP_THRESHOLDS)
    _write_csv(
        out / "sweep.csv",
        "threshold,precision,recall",
        [
            f"{_fmt(r['threshold'])},{'' if r['precision'] is None else _fmt(r['precision'])},{_fmt(r['recall'])}"
            for r in sweep
        ],
    )
    final_val = log.validation_loss[-1] if log.validation_loss else float("nan")
    print(f"trained discriminator: train mse {log.train_loss[-1]:.4f}, validation mse {final_val:.4f}")
    return 0


def _cmd_train_policy(args) -> int:
    records = read_rl_ndjson(Path(args.data) / "rl.ndjson")
    config = IQLConfig(tau=args.tau, beta=args.beta, gamma=args.gamma, steps=args.steps, seed=args.seed)
    q, v, pi, log = train_iql(records, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    nn.save_checkpoint(out / "q.ckpt", q, rng_seed=args.seed, step=args.steps)
    nn.save_checkpoint(out / "v.ckpt", v, rng_seed=args.seed, step=args.steps)
    nn.save_checkpoint(out / "policy.ckpt", pi, rng_seed=args.seed, step=args.steps)
    logged_steps = [s for s in range(config.steps) if s % 50 == 0 or s == config.steps - 1]
    rows = [
        f"{s},{_fmt(lv)},{_fmt(lq)},{_fmt(lp)}"
        for s, lv, lq, lp in zip(logged_steps, log.v_loss, log.q_loss, log.pi_loss)
    ]
    _write_csv(out / "loss.csv", "step,v_loss,q_loss,pi_loss", rows)
    print(f"trained policy: v {log.v_loss[-1]:.4f}, q {log.q_loss[-1]:.4f}, pi {log.pi_loss[-1]:.4f}")
    return 0


def _cmd_plan(args) -> int:
    scene = load_scene(args.scene)
    disc_params, _, _ = nn.load_checkpoint(args.disc)
    policy_params, _, _ = nn.load_checkpoint(args.policy)
    models = mcts.PlannerModels.from_checkpoints(disc_params, policy_params)
    config = mcts.SearchConfig(
        iterations=args.k, exploration=args.c, mixing=args.lambda_, threshold=args.xi
    )
    result = mcts.plan_episode(scene, models, config, rng_seed=args.seed)
    payload = {
        "status": result.status,
        "final_score": result.final_score,
        "length": result.length,
        "steps": [{"scene": scene_to_dict(s), "score": sc} for s, sc in result.trajectory],
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"{result.status}: score {result.final_score:.3f} after {result.length} steps -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    environments = tuple(e.strip() for e in args.envs.split(",") if e.strip())
    disc_params, _, _ = nn.load_checkpoint(args.disc)
    score_fn = None
    if args.planner == "tsmcts":
        if args.policy is None:
            print("eval: --policy is required for the tsmcts planner", file=sys.stderr)
            return 2
        policy_params, _, _ = nn.load_checkpoint(args.policy)
        models = mcts.PlannerModels.from_checkpoints(disc_params, policy_params)
    else:
        from .discriminator import score

        models = mcts.PlannerModels(score_fn=lambda s: score(disc_params, s), sampler=None)
    report = run_benchmark(
        models,
        environments=environments,
        episodes_per_env=args.episodes,
        seed=args.seed,
        planner=args.planner,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    table = format_report_table(report)
    (out / "report.csv").write_text(table)
    print(table, end="")
    return 0


def _cmd_serve(args) -> int:
    # imported lazily so the training/planning paths never touch the web stack
    from .server import run_server

    run_server(port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tidyplan", description="Tidiness-guided tabletop rearrangement pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="Generate the tidy-to-messy training dataset")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--trajectories-per-template", type=int, default=120)
    gen.add_argument("--T", type=int, default=5, help="states per trajectory")
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=_cmd_gen_data)

    stats = sub.add_parser("stats", help="Print per-environment dataset counts")
    stats.add_argument("--data", required=True, help="directory written by gen-data")
    stats.set_defaults(func=_cmd_stats)

    disc = sub.add_parser("train-disc", help="Train the tidiness discriminator")
    disc.add_argument("--data", required=True)
    disc.add_argument("--epochs", type=int, default=30)
    disc.add_argument("--lr", type=float, default=1e-3)
    disc.add_argument("--seed", type=int, default=0)
    disc.add_argument("--out", required=True)
    disc.set_defaults(func=_cmd_train_disc)

    pol = sub.add_parser("train-policy", help="Train the rearrangement policy with IQL")
    pol.add_argument("--data", required=True)
    pol.add_argument("--tau", type=float, default=0.7)
    pol.add_argument("--beta", type=float, default=3.0)
    pol.add_argument("--gamma", type=float, default=0.95)
    pol.add_argument("--steps", type=int, default=3000)
    pol.add_argument("--seed", type=int, default=0)
    pol.add_argument("--out", required=True)
    pol.set_defaults(func=_cmd_train_policy)

    plan = sub.add_parser("plan", help="Plan one tidying episode for a scene file")
    plan.add_argument("--scene", required=True)
    plan.add_argument("--disc", required=True)
    plan.add_argument("--policy", required=True)
    plan.add_argument("--k", type=int, default=200, help="search iterations per step")
    plan.add_argument("--c", type=float, default=1.0, help="exploration constant")
    plan.add_argument("--lambda", dest="lambda_", type=float, default=0.3, help="value/outcome mixing")
    plan.add_argument("--xi", type=float, default=0.85, help="tidiness success threshold")
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--out", required=True)
    plan.set_defaults(func=_cmd_plan)

    ev = sub.add_parser("eval", help="Benchmark a planner on held-out templates")
    ev.add_argument("--envs", default="coffee,dining,office,bathroom,mixed")
    ev.add_argument("--episodes", type=int, default=100, help="episodes per environment")
    ev.add_argument("--planner", choices=("tsmcts", "random", "greedy"), default="tsmcts")
    ev.add_argument("--disc", required=True)
    ev.add_argument("--policy", default=None)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=_cmd_eval)

    serve = sub.add_parser("serve", help="Serve scenes and record human edit sessions")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
