"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 numeric-contract
violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import InvalidInputError, LogitMatrix, ToolkitError
from .harness.analysis import (
    conditional_histogram,
    entropy_range,
    joint_histogram2d,
    write_histograms_csv,
)
from .harness.evaluate import format_table, run_eval, write_report_csv
from .harness.io import ParseError, read_scores_csv, write_logits_csv, write_scores_csv
from .harness.manifest import DatasetSpec, Manifest, ManifestError, load_manifest
from .noisegen import NoiseGenConfig, write_dataset
from .rng import check_seed
from .scores import SCORE_IDS, SINGLE_MODEL_SCORES, UnknownScoreError, check_score_id, score_batch
from .simgen import ID_SCENARIO, SCENARIOS, SimConfig, make_scenario, simulate_experiment

log = logging.getLogger("ensood")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _score_list(text: str):
    ids = [s.strip() for s in text.split(",") if s.strip()]
    if not ids:
        raise argparse.ArgumentTypeError("empty score list")
    for s in ids:
        if s not in SCORE_IDS:
            raise argparse.ArgumentTypeError(
                f"unknown score id {s!r}; choose from {', '.join(SCORE_IDS)}")
    return ids


def _u64(text: str) -> int:
    try:
        return check_seed(int(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _range(text: str):
    try:
        lo, hi = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO,HI") from None
    if not hi > lo:
        raise argparse.ArgumentTypeError("range needs HI > LO")
    return lo, hi


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


# -- commands -----------------------------------------------------------------

def cmd_score(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.member is not None and not 0 <= args.member < manifest.M:
        raise UsageError(f"--member {args.member} out of range for M={manifest.M}")
    if manifest.M > 1 and args.member is None:
        single = [s for s in args.scores if s in SINGLE_MODEL_SCORES]
        if single:
            raise UsageError(f"single-model scores {', '.join(single)} need --member on an ensemble of {manifest.M}")
    out = []
    for ds in manifest.datasets:
        batch = manifest.batches[ds.name]
        for s in args.scores:
            member = args.member if s in SINGLE_MODEL_SCORES else None
            out.append((ds.name, score_batch(batch, s, member)))
    write_scores_csv(out, args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    report = run_eval(manifest, args.scores, threads=args.threads)
    write_report_csv(report, args.out)
    if not args.quiet:
        print(format_table(report))
    return EXIT_OK


def _experiment_from_config(path: Path, n_override):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or "id" not in data or "ood" not in data:
        raise ManifestError(f"{path}: expected keys 'id' and 'ood'")

    def cfg(d):
        c = SimConfig.from_dict(d)
        return c if n_override is None else SimConfig.from_dict({**c.to_dict(), "n_samples": n_override})

    if not isinstance(data["ood"], dict) or not data["ood"]:
        raise ManifestError(f"{path}: 'ood' must map dataset names to configs")
    id_name = data.get("id_name", ID_SCENARIO)
    try:
        return id_name, cfg(data["id"]), {name: cfg(d) for name, d in data["ood"].items()}
    except (InvalidInputError, TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: {exc}") from None


def cmd_simulate(args) -> int:
    n = args.n if args.n is not None else 10_000
    if args.config is not None:
        id_name, id_cfg, ood_cfgs = _experiment_from_config(args.config, args.n)
    else:
        names = [s.strip() for s in args.scenario.split(",") if s.strip()]
        for s in names:
            if s not in SCENARIOS or s == ID_SCENARIO:
                raise UsageError(f"unknown OOD scenario {s!r}; choose from "
                                 f"{', '.join(x for x in SCENARIOS if x != ID_SCENARIO)}")
        id_name = ID_SCENARIO
        id_cfg = make_scenario(ID_SCENARIO, n)
        ood_cfgs = {s: make_scenario(s, n) for s in names}

    batches = simulate_experiment(id_cfg, ood_cfgs, args.seed, id_name=id_name, threads=args.threads)
    out = Path(args.out_dir)
    specs = []
    for d, (name, batch) in enumerate(batches.items()):
        sub = out / name
        sub.mkdir(parents=True, exist_ok=True)
        files = []
        for m, member in enumerate(batch.members):
            if d > 0:
                member = LogitMatrix(member.sample_ids, member.logits)  # labels only for ID
            rel = f"{name}/member_{m}.csv"
            write_logits_csv(member, out / rel)
            files.append(rel)
        specs.append(DatasetSpec(name, files, batch.n_samples))
    K, M = id_cfg.K, id_cfg.M
    manifest = Manifest(K, [f"member_{m}" for m in range(M)], specs[0], specs[1:])
    manifest.dump(out / "manifest.json")
    (out / "simulation.json").write_text(json.dumps({
        "seed": args.seed,
        "id": {"name": id_name, **id_cfg.to_dict()},
        "ood": {k: v.to_dict() for k, v in ood_cfgs.items()},
    }, indent=2) + "\n")
    return EXIT_OK


def cmd_noisegen(args) -> int:
    write_dataset(NoiseGenConfig(args.n, args.seed, args.size), args.out_dir, threads=args.threads)
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.num_classes is not None and args.num_classes < 2:
        raise UsageError("--num-classes must be >= 2")
    check_score_id(args.x)
    check_score_id(args.y)
    series = read_scores_csv(args.scores)
    datasets = []
    for ds, sid in series:
        if ds not in datasets:
            datasets.append(ds)
    pairs = [(ds, series[(ds, args.x)], series[(ds, args.y)]) for ds in datasets
             if (ds, args.x) in series and (ds, args.y) in series]
    if not pairs:
        raise ParseError(args.scores, 1, f"no dataset has both {args.x!r} and {args.y!r}")

    def default_range(idx):
        if args.num_classes is not None:
            return entropy_range(args.num_classes)
        lo = min(float(p[idx].values.min()) for p in pairs)
        hi = max(float(p[idx].values.max()) for p in pairs)
        return lo, hi

    x_range = args.x_range or default_range(1)
    y_range = args.y_range or default_range(2)
    tables = []
    for ds, x, y in pairs:
        tables.append((ds, conditional_histogram(x, y, args.bins, args.bins, x_range, y_range)))
    for ds, x, y in pairs:
        tables.append((ds, joint_histogram2d(x, y, args.bins, args.bins, x_range, y_range)))
    write_histograms_csv(tables, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ensood", description="Ensemble uncertainty scores and OOD detection metrics.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("score", help="per-sample uncertainty scores")
    sp.add_argument("--manifest", required=True, type=Path)
    sp.add_argument("--scores", required=True, type=_score_list)
    sp.add_argument("--out", required=True, type=Path)
    sp.add_argument("--member", type=int, default=None, help="member index for single-model scores")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("eval", help="AUROC / FPR@95 report")
    sp.add_argument("--manifest", required=True, type=Path)
    sp.add_argument("--scores", required=True, type=_score_list)
    sp.add_argument("--out", required=True, type=Path)
    sp.add_argument("--threads", type=_positive, default=1)
    sp.add_argument("--quiet", action="store_true", help="do not print the table")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("simulate", help="synthetic ensemble logits plus manifest")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="comma list of OOD presets (ID is id-confident)")
    src.add_argument("--config", type=Path, help='JSON {"id": {...}, "ood": {name: {...}}}')
    sp.add_argument("--seed", required=True, type=_u64)
    sp.add_argument("--out-dir", required=True, type=Path)
    sp.add_argument("--n", type=_positive, default=None, help="samples per dataset (default 10000)")
    sp.add_argument("--threads", type=_positive, default=1)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("noisegen", help="synthetic noise images (P6) plus sidecar CSV")
    sp.add_argument("--n", required=True, type=_positive)
    sp.add_argument("--seed", required=True, type=_u64)
    sp.add_argument("--out-dir", required=True, type=Path)
    sp.add_argument("--size", type=_positive, default=256)
    sp.add_argument("--threads", type=_positive, default=1)
    sp.set_defaults(func=cmd_noisegen)

    sp = sub.add_parser("analyze", help="conditional and joint histograms of two scores")
    sp.add_argument("--scores", required=True, type=Path)
    sp.add_argument("--x", default="avg-entropy")
    sp.add_argument("--y", default="mi")
    sp.add_argument("--bins", type=_positive, default=25)
    sp.add_argument("--out", required=True, type=Path)
    sp.add_argument("--num-classes", type=int, default=None,
                    help="K; sets the default bin range to [0, ln K]")
    sp.add_argument("--x-range", type=_range, default=None)
    sp.add_argument("--y-range", type=_range, default=None)
    sp.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, UnknownScoreError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (ParseError, ManifestError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except InvalidInputError as exc:
        log.error("numeric contract violated: %s", exc)
        return EXIT_NUMERIC
    except ToolkitError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
