import argparse
import json
import sys
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import pandas as pd

import curio_wrapper
import logger
from common import settings
from common.exceptions import GridFillError, ValidationError
from common.helper import atomic_write, derive_seed, fingerprint_arrays, fingerprint_file, format_float, safe_name
from dataset.cleaning import clean, filter_low_missing
from dataset.dataset_exceptions import StoreExistsError
from dataset.folds import split_by_site, split_round
from dataset.image import augment, flatten_image, reshape_to_image
from dataset.records import CsvSchema, MeterType, ingest_csv
from dataset.store import ImageStore
from evaluation.aggregate import table_to_csv, write_summaries
from evaluation.evaluation_exceptions import MissingModelError
from evaluation.experiment import ExperimentMatrix, run_experiment
from evaluation.plots import emit_plots
from masks.generators import generate_mask
from masks.mask_grid import MaskGrid, MaskKind
from models.bundle import ARCHITECTURES, PERSISTENCE, ModelBundle, build_model, impute
from numeric.gradcheck import run_suite
from numeric.numeric_exceptions import GradCheckFailedError
from synth.fleet import SynthSpec, generate_fleet, write_fleet_csv
from training.config import load_train_config
from training.trainer import train
from training.training_exceptions import TrainConfigError

VERSION = "1.0"
CHECKPOINT_SUFFIX = ".gfm"


@dataclass
class RunManifest(object):
    """
    Written as manifest.json next to the outputs of every command
    """
    command: str
    arguments: dict
    config: dict
    seeds: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)  # path or name -> sha256
    outputs: list = field(default_factory=list)
    version: str = VERSION
    wall_time_seconds: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1, default=str) + "\n"

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        atomic_write(path, self.to_json(), mode="w")
        return path


def checkpoint_name(architecture, fold) -> str:
    return f"{architecture}_fold{fold}{CHECKPOINT_SUFFIX}"


def cmd_synth(args, manifest: RunManifest):
    overrides = {"seed": args.seed}
    if args.sites is not None:
        overrides["sites"] = args.sites
    if args.meters_per_site is not None:
        overrides["meters_per_site"] = args.meters_per_site
    if args.noise_sigma is not None:
        overrides["noise_sigma"] = args.noise_sigma
    spec = SynthSpec.from_settings(**overrides)
    path = write_fleet_csv(generate_fleet(spec), Path(args.out) / "fleet.csv")
    manifest.seeds["synth"] = spec.seed
    manifest.outputs.append(str(path))


def cmd_prepare(args, manifest: RunManifest):
    store = ImageStore(args.out)
    if store.exists():
        if not args.force:
            raise StoreExistsError(store.root)
        store.clear()
    try:
        meter_type = MeterType.parse(args.meter_type) if args.meter_type else None
    except ValueError:
        raise ValidationError(f"Unknown meter type {args.meter_type!r}. Expected one of: {', '.join(t.value for t in MeterType)}") from None
    if args.layout == "wide" and meter_type is None:
        raise ValidationError("--layout wide needs --meter-type")
    schema = CsvSchema(layout=args.layout, wide_meter_type=meter_type)
    records = ingest_csv(args.input, schema)
    manifest.inputs[str(args.input)] = fingerprint_file(args.input)
    cleaned = curio_wrapper.parallel_map(clean, records)
    kept = filter_low_missing(cleaned, args.threshold)
    images = curio_wrapper.parallel_map(reshape_to_image, kept)
    assignment = split_by_site(images, derive_seed(args.seed, "prepare"))
    for image in images:
        store.save(image)
    store.save_folds(assignment)
    logger.info(f"Prepared store {store.root}: {len(images)} images of {len(records)} meters")
    manifest.seeds["split_by_site"] = derive_seed(args.seed, "prepare")
    manifest.outputs.extend([str(store.root / "images"), str(store.fold_path)])


def _load_store(path, manifest: RunManifest):
    store = ImageStore(path)
    images = store.load_all()
    assignment = store.load_folds()
    manifest.inputs["store_images"] = fingerprint_arrays([image.matrix for image in images])
    manifest.inputs[str(store.fold_path)] = fingerprint_file(store.fold_path)
    return images, assignment


def cmd_train(args, manifest: RunManifest):
    if args.model == PERSISTENCE:
        raise TrainConfigError("Persistence has no parameters to train")
    config = load_train_config(args.config, architecture=args.model, seed=args.seed)
    images, assignment = _load_store(args.store, manifest)
    train_images, val_images, _ = split_round(images, assignment, args.fold)
    train_set = augment(train_images, derive_seed(args.seed, "augment", args.fold))

    run_name = f"{args.model}_fold{args.fold}"
    model = build_model(args.model, seed=derive_seed(args.seed, "model", args.fold))
    bundle, log = train(model, train_set, val_images, config, run_name=run_name)

    out_dir = Path(args.out)
    checkpoint = out_dir / checkpoint_name(args.model, args.fold)
    bundle.save(checkpoint)
    log_path = out_dir / f"{run_name}_trainlog.csv"
    atomic_write(log_path, log.to_csv(), mode="w")
    manifest.arguments["train_config"] = config.to_dict()
    manifest.seeds.update({"train": config.seed, "augment": derive_seed(args.seed, "augment", args.fold),
                           "init": derive_seed(args.seed, "model", args.fold)})
    manifest.outputs.extend([str(checkpoint), str(log_path)])


def _impute_mask(args) -> MaskGrid:
    if args.mask_file:
        if not Path(args.mask_file).exists():
            raise ValidationError(f"Mask file {args.mask_file} does not exist")
        return MaskGrid.from_text(Path(args.mask_file).read_text(encoding="utf-8"))
    if args.kind is None or args.rate is None:
        raise ValidationError("impute needs --mask-file or both --kind and --rate")
    return generate_mask(MaskKind(args.kind), args.rate, derive_seed(args.seed, "impute", args.meter_id, args.kind, format_float(args.rate)))


def cmd_impute(args, manifest: RunManifest):
    if args.checkpoint:
        model = ModelBundle.load(args.checkpoint)
        manifest.inputs[str(args.checkpoint)] = fingerprint_file(args.checkpoint)
    elif args.model == PERSISTENCE:
        model = build_model(PERSISTENCE)
    else:
        raise ValidationError("impute needs --checkpoint or --model persistence")
    image = ImageStore(args.store).find(args.meter_id)
    mask = _impute_mask(args)
    result = impute(model, image, mask)

    values = flatten_image(result.filled)
    if args.denormalize:
        values = image.norm.invert(values)
    frame = pd.DataFrame({
        "timestamp": image.timestamps.strftime("%Y-%m-%dT%H:%M:%S"),
        "value": values,
        "provenance": flatten_image(result.provenance),
    })
    path = Path(args.out) / f"{safe_name(args.meter_id)}_imputed.csv"
    atomic_write(path, table_to_csv(frame), mode="w")
    logger.info(f"Imputed {int(result.imputed.sum())} cells of {args.meter_id} with {model.architecture}")
    manifest.seeds["mask"] = int(mask.seed)
    manifest.outputs.append(str(path))


def _load_models(matrix: ExperimentMatrix, checkpoint_dir, manifest: RunManifest) -> dict:
    models = {}
    for architecture in matrix.models:
        if architecture == PERSISTENCE:
            continue
        for fold in matrix.folds:
            path = Path(checkpoint_dir) / checkpoint_name(architecture, fold) if checkpoint_dir else None
            if path is None or not path.exists():
                raise MissingModelError(architecture, fold)
            models[architecture, fold] = ModelBundle.load(path)
            manifest.inputs[str(path)] = fingerprint_file(path)
    return models


def cmd_evaluate(args, manifest: RunManifest):
    images, assignment = _load_store(args.store, manifest)
    folds = args.folds if args.folds is not None else range(assignment.fold_count)
    matrix = ExperimentMatrix.from_settings(args.models, folds)
    if args.kinds:
        matrix = ExperimentMatrix(matrix.models, tuple(args.kinds), matrix.rates, matrix.folds)
    if args.rates:
        matrix = ExperimentMatrix(matrix.models, matrix.kinds, tuple(args.rates), matrix.folds)
    models = _load_models(matrix, args.checkpoints, manifest)
    example_rate = settings.Settings().Evaluation.ExampleRate if args.example_rate is None else args.example_rate

    report = run_experiment(matrix, images, assignment, models, args.seed, denormalize=args.denormalize, example_rate=example_rate)
    out_dir = Path(args.out)
    report_path = out_dir / "report.csv"
    atomic_write(report_path, report.to_csv(), mode="w")
    excluded_path = out_dir / "excluded.csv"
    excluded = pd.DataFrame(report.excluded, columns=["model", "meter_id", "kind", "rate", "fold", "reason"])
    atomic_write(excluded_path, table_to_csv(excluded), mode="w")
    manifest.outputs.extend([str(report_path), str(excluded_path)])
    if report.rows:
        manifest.outputs.extend(str(path) for path in write_summaries(report, out_dir))
        manifest.outputs.extend(str(path) for path in emit_plots(report, out_dir / "plots"))
    else:
        logger.warn("Report holds no rows, skipping summaries and plot data")
    manifest.seeds["evaluate"] = args.seed


def cmd_gradcheck(args, manifest: RunManifest):
    reports = run_suite(points=args.points, seed=args.seed, tolerance=args.tolerance, corrupt=2.0 if args.corrupt else 1.0)
    frame = pd.DataFrame({
        "op": [report.op_name for report in reports],
        "max_relative_error": [report.max_relative_error for report in reports],
        "tolerance": [report.tolerance for report in reports],
        "passed": [report.passed for report in reports],
    })
    path = Path(args.out) / "gradcheck.csv"
    atomic_write(path, table_to_csv(frame), mode="w")
    manifest.seeds["gradcheck"] = args.seed
    manifest.outputs.append(str(path))
    failed = [report.op_name for report in reports if not report.passed]
    if failed:
        raise GradCheckFailedError(failed)


COMMANDS = {
    "synth": cmd_synth,
    "prepare": cmd_prepare,
    "train": cmd_train,
    "impute": cmd_impute,
    "evaluate": cmd_evaluate,
    "gradcheck": cmd_gradcheck,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='Root seed, every random draw is derived from it')
    common.add_argument('--config', default=None, help='Flat "key = value" file overriding training settings')
    common.add_argument('--out', default="out", help='Output directory')

    parser = argparse.ArgumentParser(prog="gridfill", description='Imputation of hourly building-energy gaps as image inpainting.')
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", parents=[common], help='Generate a synthetic meter fleet CSV')
    synth.add_argument('--sites', type=int, default=None, help='Number of sites (default Synth.Sites)')
    synth.add_argument('--meters-per-site', type=int, default=None, help='Meters per site (default Synth.MetersPerSite)')
    synth.add_argument('--noise-sigma', type=float, default=None, help='Relative noise of the readings (default Synth.NoiseSigma)')

    prepare = commands.add_parser("prepare", parents=[common], help='Ingest, clean, filter, reshape and split a meter CSV into a store')
    prepare.add_argument('--input', required=True, help='Meter CSV (.csv or .csv.gz)')
    prepare.add_argument('--layout', choices=("long", "wide"), default="long", help='long: one reading per row, wide: one column per meter')
    prepare.add_argument('--meter-type', default=None, help='Meter type of a wide file')
    prepare.add_argument('--threshold', type=float, default=None, help='Keep meters missing strictly less than this fraction (default Dataset.MissingThreshold)')
    prepare.add_argument('--force', action='store_true', help='Rebuild an existing store')

    train_parser = commands.add_parser("train", parents=[common], help='Train one architecture on one cross-validation round')
    train_parser.add_argument('--model', required=True, choices=ARCHITECTURES, help='Architecture')
    train_parser.add_argument('--fold', type=int, default=0, help='Cross-validation round')
    train_parser.add_argument('--store', required=True, help='Store directory written by prepare')

    impute_parser = commands.add_parser("impute", parents=[common], help='Impute one meter under a mask')
    impute_parser.add_argument('--store', required=True, help='Store directory written by prepare')
    impute_parser.add_argument('--meter-id', required=True, help='Meter to impute')
    impute_parser.add_argument('--checkpoint', default=None, help='Model checkpoint written by train')
    impute_parser.add_argument('--model', choices=(PERSISTENCE,), default=None, help='Use the weekly persistence baseline instead of a checkpoint')
    impute_parser.add_argument('--kind', choices=[kind.value for kind in MaskKind], default=None, help='Mask kind')
    impute_parser.add_argument('--rate', type=float, default=None, help='Missing rate of the mask')
    impute_parser.add_argument('--mask-file', default=None, help='Mask text file instead of --kind and --rate')
    impute_parser.add_argument('--denormalize', action='store_true', help='Write values in the unit of the input')

    evaluate = commands.add_parser("evaluate", parents=[common], help='Run the experiment matrix and write report, summaries and plot data')
    evaluate.add_argument('--store', required=True, help='Store directory written by prepare')
    evaluate.add_argument('--models', nargs='+', choices=ARCHITECTURES, default=[PERSISTENCE], help='Architectures to score')
    evaluate.add_argument('--checkpoints', default=None, help='Directory holding <model>_fold<k>.gfm checkpoints')
    evaluate.add_argument('--folds', type=int, nargs='+', default=None, help='Cross-validation rounds (default all)')
    evaluate.add_argument('--kinds', nargs='+', choices=[kind.value for kind in MaskKind], default=None, help='Mask kinds (default Evaluation.Kinds)')
    evaluate.add_argument('--rates', type=float, nargs='+', default=None, help='Missing rates (default Evaluation.Rates)')
    evaluate.add_argument('--example-rate', type=float, default=None, help='Rate of the overlay and heatmap examples (default Evaluation.ExampleRate)')
    evaluate.add_argument('--denormalize', action='store_true', help='Score in the unit of the input')

    gradcheck = commands.add_parser("gradcheck", parents=[common], help='Finite-difference check of every layer backward')
    gradcheck.add_argument('--points', type=int, default=100, help='Random points per op')
    gradcheck.add_argument('--tolerance', type=float, default=1e-4, help='Maximum relative error')
    gradcheck.add_argument('--corrupt', action='store_true', help='Scale analytic gradients by 2, the check must fail')
    return parser


def main(argv=None) -> int:
    """
    :return: exit code, 0 on success, 2 on validation errors, 1 on other failures
    """
    args = build_parser().parse_args(argv)
    manifest = RunManifest(command=args.command, arguments={k: v for k, v in sorted(vars(args).items())},
                           config=settings.Settings().to_dict())
    started = time.perf_counter()
    try:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, manifest)
    except ValidationError as e:
        logger.error(f"{args.command}: {e}")
        return 2
    except GridFillError as e:
        logger.exception(f"{args.command} failed:", e)
        return 1
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly:", e)
        return 1
    finally:
        manifest.wall_time_seconds = round(time.perf_counter() - started, 3)
        if Path(args.out).is_dir():
            manifest.write(args.out)
    return 0


if __name__ == '__main__':
    logger.GeneralLogger()  # Instantiate logger once
    sys.exit(main())
