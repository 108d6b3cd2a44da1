"""Command-line entry points.

    execgym run      — drive episodes with a policy under a strategy
    execgym validate — gold-replay a dataset (every instance must score 1)
    execgym human    — play an episode interactively
    execgym report   — aggregate saved trajectories
    execgym serve    — expose environments over the wire protocol
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Sequence

from ..core.metrics import summarize
from ..data.loader import instances_from
from ..envs import ENV_NAMES, default_dataset_path, make_env, resolve_backend
from ..errors import ExecGymError
from .human import human_repl
from .model import ChatModelClient, ModelClientConfig
from .policy import ScriptedPolicy, oracle_script
from .strategies import STRATEGY_KINDS, StrategyConfig, run_episode

logger = logging.getLogger(__name__)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except ExecGymError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="execgym")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="drive episodes with a policy")
    _env_args(run)
    run.add_argument("--strategy", choices=[k for k in STRATEGY_KINDS if k != "human"],
                     default="try_again")
    run.add_argument("--policy", choices=("model", "oracle", "human"), default="oracle")
    run.add_argument("--max-turns", type=int, default=10)
    run.add_argument("--traj-dir", default=None)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--indices", default=None,
                     help="episodes to run, e.g. '0,3,5-8' (default: whole dataset)")
    run.add_argument("--model-base-url", default=None)
    run.add_argument("--model-name", default=None)
    run.add_argument("--api-key-env", default="MODEL_API_KEY")
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="gold-replay a dataset")
    _env_args(validate)
    validate.add_argument("--workers", type=int, default=1)
    validate.set_defaults(func=cmd_validate)

    human = sub.add_parser("human", help="play one episode interactively")
    _env_args(human)
    human.add_argument("--index", type=int, default=None)
    human.add_argument("--max-turns", type=int, default=10)
    human.add_argument("--traj-dir", default=None)
    human.set_defaults(func=cmd_human)

    report_cmd = sub.add_parser("report", help="aggregate saved trajectories")
    report_cmd.add_argument("traj_dir")
    report_cmd.add_argument("--group-by", default=None)
    report_cmd.add_argument("--json", action="store_true", dest="as_json")
    report_cmd.set_defaults(func=cmd_report)

    serve = sub.add_parser("serve", help="expose environments over the wire")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=7710)
    serve.add_argument("--http-port", type=int, default=None)
    serve.add_argument("--backend", choices=("auto", "local", "docker"), default="auto")
    serve.add_argument("--engine-endpoint", default=None)
    serve.add_argument("--max-sessions", type=int, default=16)
    serve.add_argument("--idle-timeout", type=float, default=600.0)
    serve.add_argument("--traj-dir", default=None)
    serve.set_defaults(func=cmd_serve)

    return parser


def _env_args(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--env", choices=ENV_NAMES, required=True)
    cmd.add_argument("--dataset", default=None)
    cmd.add_argument("--backend", choices=("auto", "local", "docker"), default="auto")
    cmd.add_argument("--engine-endpoint", default=None)
    cmd.add_argument("--exec-timeout", type=float, default=60.0)


def _dataset_instances(args: argparse.Namespace):
    path = args.dataset or default_dataset_path(args.env)
    if args.env == "ctf":
        from ..envs.ctf.bundle import load_bundles

        return load_bundles(path)[1]
    return instances_from(str(path))


def cmd_run(args: argparse.Namespace) -> int:
    backend = resolve_backend(args.backend, args.engine_endpoint)
    instances = _dataset_instances(args)
    indices = _parse_indices(args.indices, len(instances))
    strategy = StrategyConfig.for_kind(args.strategy, max_turns=args.max_turns)

    if args.policy == "human":
        env = _build_env(args, backend)
        try:
            for index in indices:
                human_repl(env, index=index, max_turns=args.max_turns)
        finally:
            env.close()
        return 0

    model_client = None
    if args.policy == "model":
        if not args.model_base_url or not args.model_name:
            print("error: --policy model requires --model-base-url and --model-name", file=sys.stderr)
            return 2
        model_client = ChatModelClient(
            ModelClientConfig(
                base_url=args.model_base_url,
                model_name=args.model_name,
                api_key_env_var=args.api_key_env,
            )
        )

    trajectories = []
    lock = threading.Lock()

    def worker(assigned: list[int]) -> None:
        env = _build_env(args, backend)
        try:
            for index in assigned:
                if args.policy == "oracle":
                    policy = ScriptedPolicy(oracle_script(env, env.instances[index], strategy.kind))
                else:
                    policy = model_client
                traj = run_episode(env, policy, strategy, index=index)
                with lock:
                    trajectories.append(traj)
                logger.info(
                    "episode %s: reward=%s terminated_by=%s turns=%d",
                    traj.task.id, traj.reward, traj.terminated_by, len(traj.turns),
                )
        finally:
            env.close()

    workers = max(1, min(args.workers, len(indices)))
    if workers == 1:
        worker(list(indices))
    else:
        chunks = [list(indices)[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for future in [pool.submit(worker, chunk) for chunk in chunks if chunk]:
                future.result()

    summary = summarize(trajectories)
    print(json.dumps(summary.as_dict(), indent=2))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    from ..data.validate import validate_gold

    backend = resolve_backend(args.backend, args.engine_endpoint)
    instances = _dataset_instances(args)
    report = validate_gold(
        lambda: _build_env(args, backend), instances, max_workers=args.workers
    )
    print(report.render())
    return 0 if report.passed else 1


def cmd_human(args: argparse.Namespace) -> int:
    backend = resolve_backend(args.backend, args.engine_endpoint)
    env = _build_env(args, backend, traj_dir=args.traj_dir)
    try:
        trajectory = human_repl(env, index=args.index, max_turns=args.max_turns)
    finally:
        env.close()
    print(f"terminated_by={trajectory.terminated_by} reward={trajectory.reward}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from .report import report

    result = report(args.traj_dir, group_by=args.group_by)
    print(json.dumps(result.as_dict(), indent=2) if args.as_json else result.render())
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from ..service.server import SessionService

    backend = resolve_backend(args.backend, args.engine_endpoint)

    def builder(env_name: str, params: dict[str, Any]):
        allowed = {"exec_timeout", "token_cap", "dataset"}
        kwargs = {k: v for k, v in params.items() if k in allowed}
        dataset = kwargs.pop("dataset", None)
        return make_env(env_name, dataset=dataset, backend=backend,
                        traj_dir=args.traj_dir, **kwargs)

    service = SessionService(
        builder,
        host=args.host,
        port=args.port,
        http_port=args.http_port,
        max_sessions=args.max_sessions,
        idle_timeout=args.idle_timeout,
    )
    print(f"listening on {args.host}:{args.port}" +
          (f" (http {args.http_port})" if args.http_port else ""))
    service.serve_forever()
    return 0


def _build_env(args: argparse.Namespace, backend, traj_dir: str | None = None):
    return make_env(
        args.env,
        dataset=args.dataset,
        backend=backend,
        traj_dir=traj_dir if traj_dir is not None else getattr(args, "traj_dir", None),
        exec_timeout=args.exec_timeout,
    )


def _parse_indices(spec: str | None, count: int) -> list[int]:
    if not spec:
        return list(range(count))
    out: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    bad = [i for i in out if not (0 <= i < count)]
    if bad:
        raise ValueError(f"indices out of range for dataset of {count}: {bad}")
    return out


if __name__ == "__main__":
    raise SystemExit(main())
