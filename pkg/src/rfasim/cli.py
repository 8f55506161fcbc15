"""Command-line entry point.

Subcommands: ``run`` executes a configured simulation, ``mesh`` builds
and writes only the mesh, ``verify`` runs the self-check battery, and
``scenario`` launches one of the three shipped presets. Exit codes: 0
success, 1 usage, 2 bad configuration, 3 solver failure, 4 failed
verification.
"""

import argparse
import dataclasses
import os
import sys

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting."""

    def error(self, message):
        raise _UsageError(message)


def _add_common(parser, timing=True):
    if timing:
        parser.add_argument("--tau", type=float, default=None,
                            help="override the time step")
        parser.add_argument("--tfinal", type=float, default=None,
                            help="override the final time")
    parser.add_argument("--h", type=float, default=None,
                        help="override the target mesh size")
    parser.add_argument("--threads", type=int, default=None,
                        help="BLAS thread count (default 1; "
                             "RFA_SIM_THREADS wins)")
    parser.add_argument("--strict", action="store_true",
                        help="reject unknown config keys")


def _build_parser():
    parser = _Parser(prog="rfasim",
                     description="ablation heating simulator")
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run a simulation from a config file")
    p_run.add_argument("config", help="TOML config path")
    _add_common(p_run)

    p_mesh = sub.add_parser("mesh", help="build and write only the mesh")
    p_mesh.add_argument("config", help="TOML config path")
    p_mesh.add_argument("-o", "--output", default="mesh.txt",
                        help="destination file (default mesh.txt)")
    _add_common(p_mesh, timing=False)

    p_verify = sub.add_parser("verify", help="run the self-check battery")
    p_verify.add_argument("--full", action="store_true",
                          help="use the finer study meshes")
    p_verify.add_argument("--threads", type=int, default=None)

    p_scn = sub.add_parser("scenario", help="run a shipped preset")
    p_scn.add_argument("name", choices=("test1", "test2", "test3"))
    p_scn.add_argument("-o", "--output", required=True,
                       help="output directory")
    _add_common(p_scn)

    return parser


def _apply_threads(n):
    n = max(1, int(n))
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(n)
    except ImportError:
        pass
    return n


def _resolve_threads(flag_value, config_text=None):
    from .config import solver_threads

    env = os.environ.get("RFA_SIM_THREADS")
    if env is not None:
        try:
            return _apply_threads(int(env))
        except ValueError:
            raise _UsageError(f"RFA_SIM_THREADS must be an integer, "
                              f"got {env!r}") from None
    if flag_value is not None:
        return _apply_threads(flag_value)
    if config_text is not None:
        configured = solver_threads(config_text)
        if configured is not None:
            return _apply_threads(configured)
    return _apply_threads(1)


def _read_config(path):
    from .config import ConfigError

    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") \
            from exc


def _override(config, args):
    from .config import ConfigError

    try:
        if getattr(args, "tau", None) is not None:
            config = dataclasses.replace(config, tau=args.tau)
        if getattr(args, "tfinal", None) is not None:
            config = dataclasses.replace(config, t_final=args.tfinal)
        if args.h is not None:
            geometry = dataclasses.replace(config.geometry, h_target=args.h)
            config = dataclasses.replace(config, geometry=geometry)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config


def _print_summary(result, threads):
    times = result.times
    series = result.series
    print(f"steps: {len(times) - 1}, t = {times[-1]:g}, threads = {threads}")
    print(f"theta max: {series['theta_max'][-1]:.4f} at "
          f"({series['theta_argmax_x'][-1]:.4f}, "
          f"{series['theta_argmax_y'][-1]:.4f})")
    print(f"velocity norm: {series['u_l2'][-1]:.6f}, "
          f"resistive power: {series['joule_total'][-1]:.6f}")
    if result.config.output_dir is not None:
        print(f"wrote {result.config.output_dir}/")


def _execute(config, threads):
    from .config import echo_config
    from .driver import run

    result = run(config)
    if config.output_dir is not None:
        import pathlib

        path = pathlib.Path(config.output_dir) / "config_effective.toml"
        path.write_text(echo_config(config, threads=threads),
                        encoding="utf-8")
    _print_summary(result, threads)
    return EXIT_OK


def _cmd_run(args):
    from .config import parse_config

    text = _read_config(args.config)
    notes = []
    config = parse_config(text, strict=args.strict, notes=notes)
    config = _override(config, args)
    threads = _resolve_threads(args.threads, text)
    for note in notes:
        print(f"# {note}")
    return _execute(config, threads)


def _cmd_mesh(args):
    from .config import parse_config
    from .geometry import build_channel_tissue_mesh, mesh_quality, write_mesh

    text = _read_config(args.config)
    config = parse_config(text, strict=args.strict)
    config = _override(config, args)
    _resolve_threads(args.threads, text)
    mesh = build_channel_tissue_mesh(config.geometry)
    write_mesh(mesh, args.output)
    q = mesh_quality(mesh)
    print(f"{mesh.n_vertices} vertices, {mesh.n_triangles} triangles")
    print(f"h in [{q.h_min:.4f}, {q.h_max:.4f}], min angle "
          f"{q.min_angle_deg:.2f} deg, acute: {q.is_acute}")
    print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_verify(args):
    from .verification import run_battery

    threads = _resolve_threads(args.threads)
    print(f"self-check battery (threads = {threads})")
    checks = run_battery(fast=not args.full)
    failed = 0
    for name, ok, detail in checks:
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    print(f"{len(checks)} checks, {failed} failed")
    return EXIT_VERIFY if failed else EXIT_OK


def _cmd_scenario(args):
    from .driver import scenario_test1, scenario_test2, scenario_test3

    preset = {"test1": scenario_test1, "test2": scenario_test2,
              "test3": scenario_test3}[args.name]
    config = dataclasses.replace(preset(), output_dir=args.output)
    config = _override(config, args)
    threads = _resolve_threads(args.threads)
    return _execute(config, threads)


_HANDLERS = {
    "run": _cmd_run,
    "mesh": _cmd_mesh,
    "verify": _cmd_verify,
    "scenario": _cmd_scenario,
}


def cli_main(argv=None):
    """Parse arguments, dispatch, and map failures to exit codes."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    from .config import ConfigError
    from .driver import RunError
    from .geometry import MeshError
    from .stepping import StepError

    try:
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, MeshError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RunError, StepError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(cli_main())
