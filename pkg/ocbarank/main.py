import argparse
import json
import logging
import os
import sys
from collections.abc import Iterator
from contextlib import contextmanager

from ocbarank.errors import ConfigError, InstanceError, PolicyError
from ocbarank.harness import config as harness_config
from ocbarank.harness.instances import builtin_instance, list_instances
from ocbarank.harness.output import theory_payload
from ocbarank.harness.runner import run_experiment
from ocbarank.policies import PolicyKind
from ocbarank.theory import theory_report

# Configure logging (stdout only, guard against double-initialization)
_root_logger = logging.getLogger()
if not _root_logger.handlers:
    handler = logging.StreamHandler(stream=sys.stdout)
    formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
    handler.setFormatter(formatter)
    _root_logger.setLevel(os.environ.get("OCBA_LOG_LEVEL", "INFO").upper())
    _root_logger.addHandler(handler)

logger = logging.getLogger(__name__)

# Configuration
DEFAULT_HOST = os.environ.get("OCBA_HOST", "127.0.0.1")
DEFAULT_PORT = int(os.environ.get("OCBA_PORT", 8000))

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors: same exit code, same stderr prefix."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"error: config: {message}\n")


@contextmanager
def _building() -> Iterator[None]:
    # Anything rejected while assembling inputs counts as a configuration error.
    try:
        yield
    except (InstanceError, PolicyError) as err:
        raise ConfigError(str(err)) from err


def cmd_run(args: argparse.Namespace) -> int:
    with _building():
        if args.config:
            data = harness_config.load_config_data(args.config)
        elif args.group:
            if not args.instance:
                raise ConfigError("--group needs --instance")
            data = harness_config.group_data(args.group, args.instance)
        else:
            data = {}
        data = harness_config.apply_overrides(
            data,
            instance=args.instance,
            policy=args.policy,
            delta=args.delta,
            budget=args.budget,
            n0=args.n0,
            replications=args.reps,
            master_seed=args.seed,
            output_dir=args.out,
            workers=args.workers,
        )
        cfg = harness_config.parse_config(data)

    result = run_experiment(cfg)
    for path in result.files:
        print(path)
    return EXIT_OK


def cmd_theory(args: argparse.Namespace) -> int:
    with _building():
        instance = builtin_instance(args.instance)
        if args.delta < 1:
            raise ConfigError(f"--delta must be >= 1, got {args.delta}")
    report = theory_report(instance, args.delta)
    print(json.dumps(theory_payload(instance, report, args.delta), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_list(args: argparse.Namespace) -> int:
    print("instances:")
    for name in list_instances():
        instance = builtin_instance(name)
        print(f"  {name}  k={instance.k}  best={instance.best + 1}")
    print("groups:")
    for name, policies in sorted(harness_config.GROUPS.items()):
        print(f"  {name}  {' '.join(p.label for p in policies)}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from ocbarank.server import create_app

    out = args.out or harness_config.DEFAULT_OUTPUT_DIR
    logger.info(f"Serving results from {out} on {args.host}:{args.port}")
    uvicorn.run(create_app(out), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ocbarank", description="OCBA sampling-policy experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment and write its CSVs")
    run.add_argument("config", nargs="?", help="experiment config JSON file")
    run.add_argument("--group", choices=sorted(harness_config.GROUPS))
    run.add_argument("--instance")
    run.add_argument("--policy", choices=[k.value for k in PolicyKind])
    run.add_argument("--budget", type=int)
    run.add_argument("--n0", type=int)
    run.add_argument("--delta", type=int)
    run.add_argument("--reps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.set_defaults(handler=cmd_run)

    theory = sub.add_parser("theory", help="print the theoretical constants of an instance")
    theory.add_argument("--instance", required=True)
    theory.add_argument("--delta", type=int, default=1)
    theory.set_defaults(handler=cmd_theory)

    lst = sub.add_parser("list", help="list built-in instances and experiment groups")
    lst.set_defaults(handler=cmd_list)

    serve = sub.add_parser("serve", help="serve the results directory over HTTP")
    serve.add_argument("--host", default=DEFAULT_HOST)
    serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    serve.add_argument("--out")
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"error: config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.debug("Run failed", exc_info=True)
        print(f"error: runtime: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
