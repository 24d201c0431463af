"""Command-line interface.

Every command prints one JSON document (``"schema": "v1"``) to stdout, or
CSV when ``--csv`` is given; diagnostics go to stderr. Exit status is 0 on
success, 1 on a validation failure (bad parameter, failed check) and 2 on
an I/O or parse error.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import formats
from .audit import DEFAULT_TOL, run_audit
from .errors import FocalMarginError, FormatError, ParameterError
from .gradcheck import check as run_gradcheck
from .grid import as_mask
from .losses import MARGIN_KINDS, LossKind, LossParams, loss_value_and_grad, split_terms
from .metrics import binarize, confusion, metrics as metric_report, ConfusionCounts
from .synth import DATASET_RATIOS, SynthConfig, generate_dataset, load_dataset, save_dataset
from .trainer import (
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    TrainConfig,
    compare_losses,
    describe_params,
    synthetic_dataset_factory,
    train as run_train,
)

SCHEMA = "v1"
EXIT_VALIDATION = 1
EXIT_IO = 2
KIND_NAMES = [k.value for k in LossKind]
KIND_HELP = "Kinds (case-insensitive): " + ", ".join(KIND_NAMES) + "."


class ValidationFailed(Exception):
    """A check ran to completion and failed; the result was already printed."""


def emit_json(command: str, payload: dict) -> None:
    doc = {"schema": SCHEMA, "command": command, **payload}
    click.echo(json.dumps(doc, indent=2, allow_nan=False))


def emit_csv(header, rows) -> None:
    """Comma-separated table with every column padded to a common width."""
    cells = [list(map(str, header))] + [["" if c is None else str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for r in cells:
        writer.writerow([c.ljust(w) for c, w in zip(r[:-1], widths[:-1])] + [r[-1]])
    click.echo(buf.getvalue(), nl=False)


def note(msg: str) -> None:
    click.echo(msg, err=True)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationFailed:
            sys.exit(EXIT_VALIDATION)
        except FormatError as exc:
            note(f"error: {exc}")
            sys.exit(EXIT_IO)
        except OSError as exc:
            note(f"error: {exc}")
            sys.exit(EXIT_IO)
        except FocalMarginError as exc:
            note(f"error: {exc}")
            sys.exit(EXIT_VALIDATION)

    return wrapper


# --------------------------------------------------------------------------
# shared options


def _parse_shape(text: str) -> tuple[int, int]:
    try:
        h, w = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise ParameterError(f"shape must look like HxW, got {text!r}") from None
    if h < 1 or w < 1:
        raise ParameterError(f"shape must be positive, got {text!r}")
    return h, w


_PARAM_FLAGS = [
    ("gamma_hat", "--gamma-hat", "Focal exponent on the entropy terms.", "2.0"),
    ("delta", "--delta", "Tversky weight: FN weighted by delta, FP by 1-delta.", "0.7"),
    ("gamma_tv", "--gamma-tv", "Focal Tversky exponent (shared gamma of unified kinds).", "0.75"),
    ("margin", "--margin", "Foreground logit margin m.", "0.0"),
    ("lam", "--lambda", "Compound mixing weight in [0,1]; unset adds both parts with weight 1.", "unset"),
    ("smooth", "--smooth", "Smoothing term of Dice/Tversky.", "1.0"),
    ("eps", "--eps", "Probability clamp before logs.", "1e-07"),
]


def loss_param_options(fn):
    """``--params`` plus one flag per loss hyperparameter; explicit flags win over ``--params``."""
    for dest, flag, help_text, default in reversed(_PARAM_FLAGS):
        fn = click.option(
            flag, dest, type=float, default=None, show_default=default, help=help_text
        )(fn)
    fn = click.option(
        "--params",
        "params_json",
        default=None,
        metavar="JSON|FILE",
        help="Loss parameters as an inline JSON object or a path to a JSON file. "
        'Fields: gamma_hat, delta, gamma_tv, margin, lambda, smooth, eps.',
    )(fn)
    return fn


def build_params(params_json, **flags) -> LossParams:
    params = LossParams()
    if params_json is not None:
        text = params_json
        if not params_json.lstrip().startswith("{"):
            path = Path(params_json)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise FormatError(f"cannot read params file: {exc.strerror}", params_json) from None
        try:
            params = LossParams.from_json(text)
        except ParameterError as exc:
            if "invalid loss params JSON" in str(exc):
                raise FormatError(str(exc), params_json if text is not params_json else None) from None
            raise
    overrides = {k: v for k, v in flags.items() if v is not None}
    return params.replace(**overrides) if overrides else params


def _param_flags(kwargs) -> dict:
    return {dest: kwargs.pop(dest) for dest, *_ in _PARAM_FLAGS}


def read_mask_file(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] == b"P5":
        return formats.parse_pgm(data, str(path))
    grid = formats.read_grid(path)
    try:
        return as_mask(grid)
    except ParameterError as exc:
        raise FormatError(str(exc), str(path)) from None


def read_logits(path) -> np.ndarray:
    return formats.read_grid(path)


def sig15(x: float) -> float:
    return float(f"{x:.15g}")


# --------------------------------------------------------------------------
# commands


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Focal margin losses for imbalanced binary segmentation."""


@main.command("loss")
@click.option("--kind", required=True, metavar="KIND", help=KIND_HELP)
@loss_param_options
@click.option("--logits", required=True, type=click.Path(dir_okay=False), help="Logit grid (text format).")
@click.option("--mask", required=True, type=click.Path(dir_okay=False), help="Ground-truth mask (P5 PGM or 0/1 grid text).")
@click.option("--grad-out", type=click.Path(dir_okay=False), default=None, help="Write d(loss)/d(logits) here as a grid.")
@handle_errors
def loss_cmd(kind, logits, mask, grad_out, params_json, **kwargs):
    """Evaluate one loss and its logit gradient."""
    params = build_params(params_json, **_param_flags(kwargs))
    kind = LossKind.parse(kind)
    z = read_logits(logits)
    t = read_mask_file(mask)
    out = loss_value_and_grad(kind, z, t, params)
    payload = {
        "kind": kind.value,
        "params": params.to_dict(),
        "shape": list(z.shape),
        "value": sig15(out.value),
    }
    if grad_out:
        formats.write_grid(grad_out, out.grad_logits)
        payload["grad_file"] = grad_out
    emit_json("loss", payload)


@main.command("gradcheck")
@click.option("--kind", "kinds", multiple=True, metavar="KIND", default=("ALL",), show_default=True,
              help="Loss kind to check, repeatable; ALL checks every kind. " + KIND_HELP)
@loss_param_options
@click.option("--trials", type=int, default=200, show_default=True, help="Random instances per kind.")
@click.option("--shape", default="8x8", show_default=True, help="Grid shape HxW.")
@click.option("--h", "step", type=float, default=1e-4, show_default=True, help="Central-difference step.")
@click.option("--rel-tol", type=float, default=1e-5, show_default=True)
@click.option("--abs-tol", type=float, default=1e-8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def gradcheck_cmd(kinds, trials, shape, step, rel_tol, abs_tol, seed, params_json, **kwargs):
    """Compare analytic gradients with central finite differences."""
    params = build_params(params_json, **_param_flags(kwargs))
    if trials < 1:
        raise ParameterError(f"--trials must be >= 1, got {trials}")
    selected = list(LossKind) if any(k.upper() == "ALL" for k in kinds) else [LossKind.parse(k) for k in kinds]
    shape = _parse_shape(shape)
    reports = [
        run_gradcheck(k, trials, shape, rel_tol, abs_tol, seed, params, step).to_dict() for k in selected
    ]
    ok = all(r["pass"] for r in reports)
    emit_json("gradcheck", {"pass": ok, "seed": seed, "params": params.to_dict(), "reports": reports})
    if not ok:
        raise ValidationFailed


@main.command("reduce-audit")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--trials", type=int, default=500, show_default=True, help="Random instances per edge.")
@click.option("--shape", default="8x8", show_default=True, help="Grid shape HxW.")
@click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True, help="Relative tolerance per edge.")
@handle_errors
def reduce_audit_cmd(seed, trials, shape, tol):
    """Check every reduction identity between the loss kinds."""
    if trials < 1:
        raise ParameterError(f"--trials must be >= 1, got {trials}")
    report = run_audit(seed=seed, trials=trials, shape=_parse_shape(shape), tol=tol)
    emit_json("reduce-audit", report.to_dict())
    if not report.passed:
        raise ValidationFailed


@main.command("metrics")
@click.option("--pred", multiple=True, required=True, type=click.Path(dir_okay=False),
              help="Prediction: P5 PGM mask, or probability grid (binarised). Repeatable.")
@click.option("--truth", multiple=True, required=True, type=click.Path(dir_okay=False),
              help="Ground-truth mask, paired with --pred in order. Repeatable.")
@click.option("--threshold", type=float, default=0.5, show_default=True, help="Binarisation threshold; ties go to foreground.")
@click.option("--percent", is_flag=True, help="Report metrics multiplied by 100.")
@click.option("--csv", "as_csv", is_flag=True, help="Emit CSV instead of JSON.")
@handle_errors
def metrics_cmd(pred, truth, threshold, percent, as_csv):
    """IoU, F1, recall and precision, micro-averaged over all pairs."""
    if len(pred) != len(truth):
        raise ParameterError(f"got {len(pred)} --pred but {len(truth)} --truth files")
    per_image = []
    total = ConfusionCounts()
    for p_path, t_path in zip(pred, truth):
        data = Path(p_path).read_bytes()
        if data[:2] == b"P5":
            p = formats.parse_pgm(data, p_path)
        else:
            p = binarize(formats.read_grid(p_path), threshold)
        c = confusion(p, read_mask_file(t_path))
        total = total + c
        per_image.append({"pred": p_path, "truth": t_path, "counts": c.to_dict(),
                          "metrics": metric_report(c).to_dict(percent)})
    overall = metric_report(total).to_dict(percent)
    if as_csv:
        rows = [[r["pred"], *(r["metrics"][k] for k in ("iou", "f1", "recall", "precision"))] for r in per_image]
        rows.append(["TOTAL", *(overall[k] for k in ("iou", "f1", "recall", "precision"))])
        emit_csv(["Image", "IoU", "F1", "Recall", "Precision"], rows)
        return
    emit_json("metrics", {"threshold": threshold, "percent": percent, "counts": total.to_dict(),
                          "metrics": overall, "per_image": per_image})


def synth_options(fn):
    opts = [
        click.option("--n-samples", type=int, default=20, show_default=True, help="Number of samples."),
        click.option("--size", default="96x96", show_default=True, help="Image size HxW."),
        click.option("--target-ratio", type=float, default=None, show_default="0.03",
                     help="Foreground fraction in (0, 0.2]."),
        click.option("--preset", type=click.Choice(sorted(DATASET_RATIOS)), default=None,
                     help="Use a crack dataset's foreground ratio as target."),
        click.option("--stroke-width", type=int, default=1, show_default=True),
        click.option("--n-curves", type=int, default=3, show_default=True),
        click.option("--noise", type=float, default=0.25, show_default=True, help="Feature noise std."),
        click.option("--channels", type=int, default=2, show_default=True, help="Feature channels."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def build_synth(seed, size, target_ratio, preset, stroke_width, n_curves, noise, channels) -> SynthConfig:
    if preset and target_ratio is not None:
        raise ParameterError("give either --preset or --target-ratio, not both")
    ratio = DATASET_RATIOS[preset] if preset else (0.03 if target_ratio is None else target_ratio)
    return SynthConfig(seed=seed, size=_parse_shape(size), target_ratio=ratio, stroke_width=stroke_width,
                       n_curves=n_curves, feature_noise=noise, feature_channels=channels)


@main.command("synth")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--seed", type=int, default=0, show_default=True)
@synth_options
@handle_errors
def synth_cmd(out, seed, n_samples, size, target_ratio, preset, stroke_width, n_curves, noise, channels):
    """Generate a synthetic crack dataset (PGM masks, grid features, manifest.json)."""
    cfg = build_synth(seed, size, target_ratio, preset, stroke_width, n_curves, noise, channels)
    samples = generate_dataset(cfg, n_samples)
    manifest = save_dataset(out, samples, cfg)
    emit_json("synth", {"manifest": str(manifest), "config": cfg.to_dict(),
                        "samples": [{"seed": s.seed, "achieved_ratio": s.achieved_ratio} for s in samples]})


def train_options(fn):
    opts = [
        click.option("--lr", type=float, default=DEFAULT_LEARNING_RATE, show_default=True, help="Learning rate."),
        click.option("--epochs", type=int, default=DEFAULT_EPOCHS, show_default=True),
        click.option("--val-split", type=float, default=0.25, show_default=True,
                     help="Fraction of samples (the last ones) held out for validation."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--threshold", type=float, default=0.5, show_default=True, help="Metric binarisation threshold."),
        click.option("--percent", is_flag=True, help="Report metrics multiplied by 100."),
        click.option("--csv", "as_csv", is_flag=True, help="Emit CSV instead of JSON."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@main.command("train")
@click.option("--kind", default="OURS", show_default=True, metavar="KIND", help=KIND_HELP)
@loss_param_options
@click.option("--manifest", type=click.Path(dir_okay=False), default=None,
              help="Train on a dataset manifest instead of generating one.")
@synth_options
@train_options
@handle_errors
def train_cmd(kind, manifest, n_samples, size, target_ratio, preset, stroke_width, n_curves, noise, channels,
              lr, epochs, val_split, seed, threshold, percent, as_csv, params_json, **kwargs):
    """Train the per-pixel linear model under one loss."""
    params = build_params(params_json, **_param_flags(kwargs))
    if manifest:
        dataset = load_dataset(manifest)
    else:
        synth = build_synth(seed, size, target_ratio, preset, stroke_width, n_curves, noise, channels)
        dataset = generate_dataset(synth, n_samples)
    cfg = TrainConfig(dataset=dataset, loss_kind=kind, loss_params=params, learning_rate=lr, epochs=epochs,
                      val_split=val_split, seed=seed, threshold=threshold)
    report = run_train(cfg)
    if as_csv:
        rows = []
        for r in report.history:
            m = r.val_metrics.to_dict(percent)
            rows.append([r.epoch, repr(r.train_loss), repr(r.val_loss), m["iou"], m["f1"], m["recall"], m["precision"]])
        emit_csv(["Epoch", "TrainLoss", "ValLoss", "IoU", "F1", "Recall", "Precision"], rows)
        return
    emit_json("train", report.to_dict(percent))


def parse_loss_spec(spec: str, base: LossParams) -> tuple[LossKind, LossParams, str]:
    """``KIND`` or ``KIND:key=value,key=value`` -> (kind, params, label)."""
    name, _, rest = spec.partition(":")
    kind = LossKind.parse(name)
    changes = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ParameterError(f"bad loss spec item {item!r} in {spec!r}; expected key=value")
        key = key.strip().replace("-", "_")
        if key not in base.to_dict():
            raise ParameterError(f"unknown loss parameter {key!r} in {spec!r}")
        try:
            changes[key] = None if value.strip().lower() in ("none", "null") else float(value)
        except ValueError:
            raise ParameterError(f"bad value {value!r} for {key} in {spec!r}") from None
    params = base.replace(**changes) if changes else base
    return kind, params, spec.strip()


DEFAULT_SWEEP = (
    "BCE",
    "DICE_SORENSEN",
    "FOCAL",
    "ASYM_FOCAL",
    "TVERSKY",
    "FOCAL_TVERSKY",
    "BCEDICE",
    "HYBRID_FOCAL",
    "ASYM_UNIFIED_FOCAL:delta=0.6,gamma_tv=0.5,lambda=0.5",
    "OURS:margin=0.5",
    "OURS:margin=1.0",
    "OURS:margin=1.5",
)


@main.command("sweep")
@click.option("--loss", "specs", multiple=True, metavar="KIND[:k=v,...]",
              help="Loss to compare, e.g. 'OURS:margin=1.5'. Repeatable; default is a table of "
              "baselines plus OURS at m=0.5/1.0/1.5.")
@click.option("--repeats", type=int, default=10, show_default=True, help="Training runs per loss (seeds seed..seed+repeats-1).")
@loss_param_options
@synth_options
@train_options
@handle_errors
def sweep_cmd(specs, repeats, n_samples, size, target_ratio, preset, stroke_width, n_curves, noise, channels,
              lr, epochs, val_split, seed, threshold, percent, as_csv, params_json, **kwargs):
    """Compare losses over repeated runs on fresh synthetic data per repeat."""
    if repeats < 1:
        raise ParameterError(f"--repeats must be >= 1, got {repeats}")
    base_params = build_params(params_json, **_param_flags(kwargs))
    entries = [parse_loss_spec(s, base_params) for s in (specs or DEFAULT_SWEEP)]
    synth = build_synth(seed, size, target_ratio, preset, stroke_width, n_curves, noise, channels)
    make = synthetic_dataset_factory(synth, n_samples)
    base = TrainConfig(dataset=make(seed), learning_rate=lr, epochs=epochs, val_split=val_split,
                       seed=seed, threshold=threshold)
    rows = compare_losses(base, entries, repeats=repeats, make_dataset=make)
    for r in rows:
        for e in r.errors:
            note(f"warning: {r.label}: {e}")
    if as_csv:
        names = ("iou", "f1", "recall", "precision")
        out = []
        for (kind, params, _), r in zip(entries, rows):
            d = r.to_dict(percent)["metrics"]
            fmt = (lambda v: None if v is None else f"{v:.4f}")
            out.append([kind.value, describe_params(kind, params), *(fmt(d[n]["mean"]) for n in names),
                        *(fmt(d[n]["std"]) for n in names), len(r.errors)])
        emit_csv(["Loss", "Parameters", "IoU", "F1", "Recall", "Precision",
                  "IoU_std", "F1_std", "Recall_std", "Precision_std", "Failures"], out)
        return
    emit_json("sweep", {
        "repeats": repeats, "seed": seed, "percent": percent, "synth": synth.to_dict(),
        "train": {"learning_rate": lr, "epochs": epochs, "val_split": val_split, "threshold": threshold,
                  "n_samples": n_samples},
        "rows": [r.to_dict(percent) for r in rows],
    })


@main.command("margin-table")
@click.option("--kind", default="ASYM_FOCAL_MARGIN", show_default=True, metavar="KIND",
              help="Margin loss kind: " + ", ".join(sorted(k.value for k in MARGIN_KINDS)) + ".")
@click.option("--m-list", default="0,0.5,1.0,1.5", show_default=True, help="Comma-separated margins.")
@loss_param_options
@click.option("--logits", required=True, type=click.Path(dir_okay=False), help="Logit grid (text format).")
@click.option("--mask", required=True, type=click.Path(dir_okay=False), help="Ground-truth mask (P5 PGM or 0/1 grid).")
@click.option("--csv", "as_csv", is_flag=True, help="Emit CSV instead of JSON.")
@handle_errors
def margin_table_cmd(kind, m_list, logits, mask, as_csv, params_json, **kwargs):
    """Loss value and its foreground/background entropy terms across margins."""
    params = build_params(params_json, **_param_flags(kwargs))
    kind = LossKind.parse(kind)
    if kind not in MARGIN_KINDS:
        raise ParameterError(f"{kind} has no margin; use one of {sorted(k.value for k in MARGIN_KINDS)}")
    try:
        raw = [float(x) for x in m_list.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"--m-list must be comma-separated numbers, got {m_list!r}") from None
    if not raw:
        raise ParameterError("--m-list is empty")
    margins = sorted(set(raw))
    if len(margins) != len(raw) or margins != raw:
        note(f"note: margins normalised to {margins} (deduplicated and sorted)")
    z = read_logits(logits)
    t = read_mask_file(mask)
    rows = []
    for m in margins:
        s = split_terms(kind, z, t, params.replace(margin=m))
        rows.append({"m": m, "value": s.value, "foreground": s.foreground, "background": s.background,
                     "region": s.region})
    if as_csv:
        emit_csv(["m", "value", "foreground", "background", "region"],
                 [[r["m"], repr(r["value"]), repr(r["foreground"]), repr(r["background"]), repr(r["region"])]
                  for r in rows])
        return
    emit_json("margin-table", {"kind": kind.value, "params": params.to_dict(), "rows": rows})


if __name__ == "__main__":
    main()
