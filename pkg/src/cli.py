"""
Command-line front end: denoise, inpaint, degrade, synth, metrics and bench.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence

import numpy as np
from dotenv import load_dotenv

from .config import RunConfig, build_run_config
from .errors import EmptyCorpusError, ParameterError, RestorationError
from .modules import degrade, grid, metrics, solver
from .results import BENCH_COLUMNS, METRIC_COLUMNS, ResultStore, summarize

log = logging.getLogger(__name__)

METHODS = ("twso", "sotv")
BENCH_SETTINGS = ("noise", "saltpepper", "inpaint")
CORPUS_SUFFIXES = (".png", ".pgm")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def restore(problem: solver.Problem, config: RunConfig) -> tuple[np.ndarray, int]:
    runner = solver.run_sotv if config.method == "sotv" else solver.run
    u, history = runner(problem, config.params)
    if history and isinstance(history[0], list):
        return u, max(len(h) for h in history)
    return u, len(history)


def _metrics_store(config: RunConfig) -> ResultStore | None:
    if config.metrics_csv or os.getenv("TWSO_METRICS_CSV"):
        return ResultStore(config.metrics_csv, METRIC_COLUMNS)
    return None


def _report(config: RunConfig, restored: np.ndarray, iterations: int) -> None:
    if config.reference is None:
        return
    reference = grid.load_image(config.reference, channelwise=restored.ndim == 3)
    report = metrics.evaluate(restored, reference)
    log.info("[%s] psnr=%.4f ssim=%.4f", config.command, report.psnr, report.ssim)
    store = _metrics_store(config)
    if store is not None:
        store.append_row({
            "command": config.command,
            "input": config.input,
            "reference": config.reference,
            "method": config.method,
            "seed": config.seed,
            "iterations": iterations,
            **report.as_row(),
            **config.param_row(),
        })


def cmd_denoise(config: RunConfig) -> int:
    f = grid.load_image(config.input, channelwise=config.channelwise)
    u, iterations = restore(solver.Problem.denoise(f), config)
    grid.save_image(u, config.output)
    log.info("[denoise] wrote %s after %d iterations", config.output, iterations)
    _report(config, u, iterations)
    return 0


def cmd_inpaint(config: RunConfig) -> int:
    if config.mask is None:
        raise ParameterError("inpaint needs --mask")
    f = grid.load_image(config.input, channelwise=config.channelwise)
    known = grid.load_mask(config.mask)
    u, iterations = restore(solver.Problem.inpaint(f, known), config)
    grid.save_image(u, config.output)
    log.info("[inpaint] wrote %s (%d missing pixels, %d iterations)", config.output, int((~known).sum()), iterations)
    _report(config, u, iterations)
    return 0


def cmd_degrade(config: RunConfig, args: argparse.Namespace) -> int:
    if args.kind == "mask":
        if args.input:
            m, n = grid.load_image(args.input).shape
        else:
            m = n = args.size
        known = degrade.make_random_mask(m, n, args.fraction, config.seed)
        grid.save_mask(known, config.output)
        log.info("[degrade] mask with %d missing pixels -> %s", int((~known).sum()), config.output)
        return 0

    if config.input is None:
        raise ParameterError(f"degrade {args.kind} needs --input")
    u = grid.load_image(config.input, channelwise=config.channelwise)
    if args.kind == "gaussian":
        out = degrade.add_gaussian_noise(u, args.variance, config.seed)
    else:
        out = degrade.add_salt_pepper(u, args.density, config.seed)
    grid.save_image(out, config.output)
    log.info("[degrade] %s seed=%d -> %s", args.kind, config.seed, config.output)
    return 0


def cmd_synth(config: RunConfig, args: argparse.Namespace) -> int:
    out_dir = config.output or Path(".")
    size = args.size
    if args.kind == "shapes":
        grid.save_image(degrade.make_shapes_fixture(size, size), out_dir / "shapes.png")
        log.info("[synth] shapes %dx%d -> %s", size, size, out_dir)
        return 0
    truth, known = degrade.make_stripe_fixture(size, size, args.gap)
    grid.save_image(truth, out_dir / "stripe_truth.png")
    grid.save_mask(known, out_dir / "stripe_mask.png")
    grid.save_image(degrade.apply_mask(truth, known), out_dir / "stripe_observed.png")
    log.info("[synth] stripe %dx%d gap=%s -> %s", size, size, args.gap, out_dir)
    return 0


def cmd_metrics(config: RunConfig, args: argparse.Namespace) -> int:
    test = grid.load_image(args.test, channelwise=config.channelwise)
    reference = grid.load_image(config.reference, channelwise=config.channelwise)
    report = metrics.evaluate(test, reference)
    print(f"psnr={report.psnr:.4f} ssim={report.ssim:.4f} mse={report.mse:.6g}")
    store = _metrics_store(config)
    if store is not None:
        store.append_row({
            "command": "metrics",
            "input": args.test,
            "reference": config.reference,
            **report.as_row(),
        })
    return 0


def _corpus(directory: Path) -> List[Path]:
    if not directory.is_dir():
        raise EmptyCorpusError(f"corpus {directory} is not a directory")
    images = sorted(p for p in directory.iterdir() if p.suffix.lower() in CORPUS_SUFFIXES)
    if not images:
        raise EmptyCorpusError(f"no .png/.pgm images in {directory}")
    return images


def _run_seed(seed: int, image_index: int, level_index: int) -> int:
    return int(np.random.SeedSequence([seed, image_index, level_index]).generate_state(1, dtype=np.uint64)[0])


def bench_job(path: Path, setting: str, level: float, method: str, seed: int, config: RunConfig) -> Dict[str, Any]:
    """Degrade, restore and score one corpus image at one level."""
    truth = grid.load_image(path)
    if setting == "noise":
        problem = solver.Problem.denoise(degrade.add_gaussian_noise(truth, level, seed))
    elif setting == "saltpepper":
        problem = solver.Problem.denoise(degrade.add_salt_pepper(truth, level, seed))
    else:
        known = degrade.make_random_mask(*truth.shape, level, seed)
        problem = solver.Problem.inpaint(degrade.apply_mask(truth, known), known)

    started = time.perf_counter()
    runner = solver.run_sotv if method == "sotv" else solver.run
    u, history = runner(problem, config.params)
    elapsed = time.perf_counter() - started
    report = metrics.evaluate(u, truth)
    return {
        "row_type": "run",
        "image": path.name,
        "method": method,
        "setting": setting,
        "level": level,
        "seed": seed,
        "psnr": report.psnr,
        "ssim": report.ssim,
        "iterations": len(history),
        **config.param_row(),
        "wall_time": elapsed,
    }


def cmd_bench(config: RunConfig, args: argparse.Namespace) -> int:
    images = _corpus(Path(args.corpus))
    setting = args.setting
    levels: Sequence[float] = args.levels or config.bench[setting]
    methods: Sequence[str] = [args.method] if args.method else config.bench["methods"]
    workers = args.workers or int(config.bench["workers"])

    jobs = [
        (path, setting, float(level), method, _run_seed(config.seed, i, j), config)
        for i, path in enumerate(images)
        for j, level in enumerate(levels)
        for method in methods
    ]
    log.info("[bench] %d image(s) x %d level(s) x %d method(s) on %d worker(s)", len(images), len(levels), len(methods), workers)
    run_level = logging.DEBUG if args.quiet else logging.INFO
    rows: List[Dict[str, Any]] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for done, row in enumerate(pool.map(lambda job: bench_job(*job), jobs), start=1):
            log.log(
                run_level,
                "[bench] %d/%d %s %s=%g psnr=%.3f ssim=%.4f",
                done, len(jobs), row["image"], setting, row["level"], row["psnr"], row["ssim"],
            )
            rows.append(row)

    store = ResultStore(config.output or Path("bench.csv"), BENCH_COLUMNS)
    store.append_rows(rows)
    store.append_rows(summarize(rows))
    log.info("[bench] wrote %d run row(s) to %s", len(rows), store.path)
    return 0


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver")
    group.add_argument("--p", type=int, help="fidelity exponent, 1 or 2")
    group.add_argument("--eta", type=float)
    group.add_argument("--theta1", type=float)
    group.add_argument("--theta2", type=float)
    group.add_argument("--theta3", type=float)
    group.add_argument("--max-iter", dest="max_iter", type=int)
    group.add_argument("--tol", type=float)
    group.add_argument("--refine-every", dest="refine_every", type=int)
    group.add_argument("--sigma", type=float)
    group.add_argument("--rho", type=float)
    group.add_argument("--contrast", type=float)
    group.add_argument("--gamma", type=float)
    group.add_argument("--tensor-mode", dest="tensor_mode", choices=("edge", "coherence"))
    group.add_argument("--method", choices=METHODS)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int)
    parser.add_argument("--config", help="TOML file with [solver], [tensor] and [bench] tables")
    parser.add_argument("--metrics-csv", dest="metrics_csv")
    parser.add_argument("--color", action="store_true", help="process color channels separately")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twso", description="Tensor-weighted second-order image restoration")
    parser.add_argument("--log-level", default=os.getenv("TWSO_LOG_LEVEL", "INFO"))
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("denoise", "inpaint"):
        p = sub.add_parser(name, help=f"{name} an image")
        p.add_argument("--input", required=True)
        p.add_argument("--output", required=True)
        p.add_argument("--reference")
        if name == "inpaint":
            p.add_argument("--mask", required=True, help="gray >= 128 marks missing pixels")
        _add_common_flags(p)
        _add_solver_flags(p)

    p = sub.add_parser("degrade", help="add noise or draw a random mask")
    p.add_argument("kind", choices=("gaussian", "saltpepper", "mask"))
    p.add_argument("--input")
    p.add_argument("--output", required=True)
    p.add_argument("--variance", type=float, default=0.01)
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--fraction", type=float, default=0.4)
    p.add_argument("--size", type=int, default=256)
    _add_common_flags(p)

    p = sub.add_parser("synth", help="write synthetic fixtures")
    p.add_argument("kind", choices=("stripe", "shapes"))
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--gap", default="straight:8", help="straight:W, slanted:W, zigzag:W or wide[:W]")
    p.add_argument("--output", help="output directory")
    _add_common_flags(p)

    p = sub.add_parser("metrics", help="PSNR / SSIM of a test image against a reference")
    p.add_argument("--test", required=True)
    p.add_argument("--ref", "--reference", dest="reference", required=True)
    _add_common_flags(p)

    p = sub.add_parser("bench", help="degrade -> restore -> score sweep over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--setting", choices=BENCH_SETTINGS, default="noise")
    p.add_argument("--levels", type=float, nargs="+")
    p.add_argument("--workers", type=int)
    p.add_argument("--output", help="CSV file (default bench.csv)")
    p.add_argument("--quiet", action="store_true", help="log per-run lines at DEBUG")
    _add_common_flags(p)
    _add_solver_flags(p)
    return parser


BENCH_TASKS = {"noise": "denoise", "saltpepper": "saltpepper", "inpaint": "inpaint"}

HANDLERS: Dict[str, Callable[..., int]] = {
    "denoise": lambda config, args: cmd_denoise(config),
    "inpaint": lambda config, args: cmd_inpaint(config),
    "degrade": cmd_degrade,
    "synth": cmd_synth,
    "metrics": cmd_metrics,
    "bench": cmd_bench,
}


def main(argv: Sequence[str] | None = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    level = args.log_level.upper()
    if level not in LOG_LEVELS:
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
        log.error("[ERROR] unknown log level %r, expected one of %s", args.log_level, ", ".join(LOG_LEVELS))
        return 1
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        task = BENCH_TASKS[args.setting] if args.command == "bench" else None
        config = build_run_config(args, task=task)
        return HANDLERS[args.command](config, args)
    except (RestorationError, OSError, ValueError) as err:
        log.error("[ERROR] %s: %s", args.command, err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
