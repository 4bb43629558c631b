"""Command-line interface.

Exit codes: 0 success / accepted, 2 identification returned UNKNOWN,
1 usage, parse or I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bench, fixtures
from . import gallery as gal
from .edges import EdgeParams
from .errors import ParamsMismatch, SparsePrintError
from .imaging import load_pgm, save_pgm
from .matching import DEFAULT_THRESHOLD
from .pipeline import degrade, process_probe
from .sampling import PixelMask, dump_mask, load_mask, measure, random_mask
from .tv_recon import SolverParams, psnr, reconstruct

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNKNOWN = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _edge_thresh(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a non-negative number") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError("threshold must be >= 0")
    return value


def _add_edge_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("edge detection (defaults to the gallery's settings)")
    g.add_argument("--sigma", type=float, default=None,
                   help="Gaussian smoothing sigma; 0 disables smoothing (default 1.0)")
    g.add_argument("--edge-thresh", type=_edge_thresh, default=None,
                   help="'auto' (default) or a fixed magnitude threshold")
    g.add_argument("--thin", action="store_true", default=None,
                   help="apply non-maximum suppression")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolverParams()
    g = p.add_argument_group("TV solver")
    g.add_argument("--alpha", type=float, default=d.alpha)
    g.add_argument("--eta", type=float, default=d.eta)
    g.add_argument("--step", type=float, default=d.step_size)
    g.add_argument("--max-iters", type=int, default=d.max_iters)
    g.add_argument("--tol", type=float, default=d.tol)
    g.add_argument("--fidelity-tol", type=float, default=d.fidelity_tol)


def _add_mask_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mask", help="MASK file selecting the measured pixels")
    p.add_argument("--fraction", type=float, help="draw a random mask keeping this fraction")
    p.add_argument("--seed", type=int, default=0, help="mask seed (default 0)")


def _solver(args: argparse.Namespace) -> SolverParams:
    return SolverParams(alpha=args.alpha, eta=args.eta, step_size=args.step,
                        max_iters=args.max_iters, tol=args.tol,
                        fidelity_tol=args.fidelity_tol)


def _edge_params(args: argparse.Namespace, base: EdgeParams = EdgeParams()) -> EdgeParams:
    sigma = base.sigma
    if args.sigma is not None:
        sigma = None if args.sigma == 0 else args.sigma
    return EdgeParams(
        sigma=sigma,
        threshold=base.threshold if args.edge_thresh is None else args.edge_thresh,
        thin=base.thin if args.thin is None else args.thin,
        magnitude=base.magnitude,
    )


def _mask_for(args: argparse.Namespace, shape: tuple[int, int]) -> Optional[PixelMask]:
    if args.mask and args.fraction is not None:
        raise SystemExit("error: give either --mask or --fraction, not both")
    if args.mask:
        mask = load_mask(Path(args.mask).read_bytes())
        if mask.shape != shape:
            raise SparsePrintError(f"mask {mask.shape} does not match image {shape}")
        return mask
    if args.fraction is not None:
        return random_mask(shape[0], shape[1], args.fraction, args.seed)
    return None


def _write_text(path: Optional[str], text: str) -> None:
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def cmd_enroll(args: argparse.Namespace) -> int:
    g = gal.open_or_create(args.gallery, _edge_params(args))
    wanted = _edge_params(args, g.edge_params)
    if wanted != g.edge_params:
        raise ParamsMismatch(f"gallery uses [{g.edge_params.describe()}], "
                             f"flags ask for [{wanted.describe()}]")
    g = gal.enroll(g, args.label, load_pgm(args.image))
    gal.save(g, args.gallery)
    print(f"enrolled {args.label!r}; gallery now holds {len(g)} prints")
    return EXIT_OK


def cmd_degrade(args: argparse.Namespace) -> int:
    img = load_pgm(args.image)
    mask = random_mask(img.height, img.width, args.fraction, args.seed)
    Path(args.mask_out).write_bytes(dump_mask(mask))
    save_pgm(degrade(img, mask), args.out)
    print(f"kept {mask.count} of {img.height * img.width} pixels "
          f"({100 * mask.available_fraction():.2f}%)")
    if mask.count == 0:
        print("warning: no pixels kept; reconstruction will fail with EmptyMeasurement",
              file=sys.stderr)
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    img = load_pgm(args.input)
    mask = _mask_for(args, img.shape)
    if mask is None:
        # plain degraded PGM: black pixels are taken as missing
        print("warning: no mask given; treating zero-valued pixels as missing", file=sys.stderr)
        mask = PixelMask(img.pixels > 0)
    result = reconstruct(measure(img, mask), _solver(args))
    save_pgm(result.image, args.out)
    print(f"iterations_used={result.iterations_used}")
    print(f"final_objective={result.final_objective:.6f}")
    print(f"final_fidelity={result.final_fidelity:.3e}")
    print(f"converged={str(result.converged).lower()}")
    if args.truth:
        value = psnr(load_pgm(args.truth), result.image)
        print(f"psnr={'inf' if math.isinf(value) else f'{value:.4f}'}")
    return EXIT_OK


def cmd_identify(args: argparse.Namespace) -> int:
    g = gal.load(args.gallery)
    params = _edge_params(args, g.edge_params)
    img = load_pgm(args.probe)
    mask = _mask_for(args, img.shape)
    res = process_probe(img, mask, _solver(args), params)
    report = gal.identify(g, res.edge_map, params, args.threshold)
    text = report.to_csv()
    sys.stdout.write(text)
    _write_text(args.csv, text)
    if res.recon is not None and not res.recon.converged:
        print(f"note: reconstruction stopped after {res.recon.iterations_used} "
              "iterations without converging", file=sys.stderr)
    for label in report.skipped:
        print(f"note: skipped {label!r} (size differs from probe)", file=sys.stderr)
    return EXIT_OK if report.accepted else EXIT_UNKNOWN


def cmd_bench(args: argparse.Namespace) -> int:
    fractions = sorted(float(f) for f in args.fractions.split(","))
    g = gal.load(args.gallery)
    labels = fixtures.read_labels(args.labels) if args.labels else None
    if args.labels and not args.probes:
        probe_paths = [str(Path(args.labels) / name) for name in sorted(labels)]
    else:
        probe_paths = args.probes
    if not probe_paths:
        raise SystemExit("error: no probes given (use --probes or --labels)")
    cfg = bench.SweepConfig(
        fractions=fractions,
        probes=bench.probes_from_paths(probe_paths, labels, g.labels()),
        gallery_path=args.gallery,
        trials_per_fraction=args.trials,
        base_seed=args.seed,
        solver=_solver(args),
        threshold=args.threshold,
        jobs=args.jobs,
    )
    result = bench.run_sweep(cfg)
    _write_text(args.csv, result.to_csv())
    _write_text(args.summary, result.summary_csv())
    sys.stdout.write(result.summary_csv())
    f_star = bench.transition_fraction(fractions, result.correct_rates())
    print(f"# full identification from fraction: {f_star if f_star is not None else 'none'}")
    return EXIT_OK


def cmd_gen_fixtures(args: argparse.Namespace) -> int:
    made = fixtures.write_fixtures(args.out, args.count, args.size, args.seed)
    if args.gallery:
        g = gal.open_or_create(args.gallery, _edge_params(args))
        for fx in made:
            g = gal.enroll(g, fx.label, fx.image)
        gal.save(g, args.gallery)
    print(f"wrote {len(made)} prints to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparseprint",
                     description="Fingerprint identification from partially missing pixels")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enroll", help="add a print to a gallery directory")
    p.add_argument("gallery")
    p.add_argument("label")
    p.add_argument("image", help="binary PGM")
    _add_edge_flags(p)
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("degrade", help="drop pixels at random, writing a mask and a viewable PGM")
    p.add_argument("image")
    p.add_argument("--fraction", type=float, required=True, help="fraction of pixels kept")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-out", required=True)
    p.add_argument("--out", required=True, help="degraded PGM (missing pixels black)")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("reconstruct", help="TV-inpaint the missing pixels")
    p.add_argument("input", help="original or degraded PGM")
    _add_mask_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="original PGM for PSNR reporting")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("identify", help="match a probe against a gallery")
    p.add_argument("gallery")
    p.add_argument("probe")
    _add_mask_flags(p)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--csv", help="also write the match report here")
    _add_edge_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("bench", help="availability sweep with CSV report")
    p.add_argument("--gallery", required=True)
    p.add_argument("--probes", nargs="*", default=[])
    p.add_argument("--labels", help="fixture directory holding labels.csv")
    p.add_argument("--fractions", default="0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", required=True)
    p.add_argument("--summary")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-fixtures", help="write synthetic fingerprint PGMs")
    p.add_argument("out")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gallery", help="also enroll every print into this gallery")
    _add_edge_flags(p)
    p.set_defaults(func=cmd_gen_fixtures)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return EXIT_ERROR
        raise
    except (SparsePrintError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
