"""Command-line surface tying the pipeline together.

Subcommands: convert, entropy, explain, aggregate, ssim, fuse-mask,
mask-dataset, eval, split. Exit codes: 0 success, 1 usage error, 2 data
error. Commands read and write only the paths given on their command line;
`--plot` options render a matplotlib figure next to the delimited output.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from pathlib import Path

from . import aggregate as agg
from . import cam, imagegen, masking, metrics, tensorio
from ._util import MalvisError
from .manifest import (
    DEFAULT_SEED,
    DEFAULT_TRAIN_FRAC,
    DEFAULT_VAL_FRAC,
    read_manifest,
    split_manifest,
    write_manifest,
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1 (2 is reserved for data errors)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _size(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text)
    if not m or int(m[1]) < 1 or int(m[2]) < 1:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT with positive integers, got {text!r}")
    return int(m[1]), int(m[2])


# ---------------------------------------------------------------- commands


def _cmd_convert(args) -> int:
    out = Path(args.out)
    single_file = len(args.inputs) == 1 and out.suffix.lower() == ".png"
    if not single_file:
        out.mkdir(parents=True, exist_ok=True)
    for src in args.inputs:
        data = Path(src).read_bytes()
        img = imagegen.bytes_to_image(data, width=args.width)
        if args.resize:
            img = imagegen.resize_image(img, args.resize[0], args.resize[1])
        dst = out if single_file else out / (Path(src).stem + ".png")
        imagegen.save_png(img, dst)
        print(f"wrote {dst} ({img.shape[1]}x{img.shape[0]})")
    return 0


def _cmd_entropy(args) -> int:
    data = Path(args.input).read_bytes()
    profile = imagegen.entropy_profile(data, window=args.window, stride=args.stride)
    imagegen.save_entropy_csv(profile, args.out)
    print(f"wrote {args.out} ({len(profile.values)} windows)")
    if args.plot:
        from . import report

        report.save_entropy_figure(profile, args.plot, title=Path(args.input).name)
        print(f"wrote {args.plot}")
    return 0


def _cmd_explain(args) -> int:
    features = tensorio.read_tensor(args.features)
    gradients = tensorio.read_tensor(args.gradients)
    raw = cam.gradcam_raw(features, gradients) if args.method == "gradcam" else cam.hirescam_raw(features, gradients)
    hm = cam.finalize_heatmap(raw)
    if args.upsample:
        hm = cam.upsample_heatmap(hm, args.upsample[0], args.upsample[1])
    tensorio.write_heatmap(hm, args.out)
    print(f"wrote {args.out} ({hm.shape[1]}x{hm.shape[0]}, method {args.method})")
    if args.png:
        imagegen.save_png(cam.heatmap_to_pixels(hm), args.png)
        print(f"wrote {args.png}")
    if args.plot:
        from . import report

        image = imagegen.load_png(args.image) if args.image else None
        report.save_heatmap_figure(hm, args.plot, image=image, title=args.method)
        print(f"wrote {args.plot}")
    return 0


def _cmd_aggregate(args) -> int:
    maps = [tensorio.read_heatmap(p) for p in args.heatmaps]
    cum = agg.cumulative_heatmap(args.label, maps)
    tensorio.write_heatmap(cum.map, args.out)
    sidecar = Path(args.out).with_suffix(".json")
    sidecar.write_text(json.dumps({"class": cum.class_label, "count": cum.count}) + "\n", encoding="utf-8")
    print(f"wrote {args.out} (class {cum.class_label}, {cum.count} heatmaps)")
    if args.png:
        imagegen.save_png(cam.heatmap_to_pixels(cum.map), args.png)
        print(f"wrote {args.png}")
    if args.plot:
        from . import report

        image = imagegen.load_png(args.image) if args.image else None
        report.save_heatmap_figure(cum.map, args.plot, image=image, title=f"cumulative {cum.class_label}")
        print(f"wrote {args.plot}")
    return 0


def _load_model_dir(path) -> dict[str, agg.CumulativeHeatmap]:
    d = Path(path)
    files = sorted(d.glob("*.npy"))
    if not files:
        raise MalvisError(f"no cumulative heatmaps (*.npy) in {d}")
    return {f.stem: agg.CumulativeHeatmap(f.stem, 1, tensorio.read_heatmap(f)) for f in files}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {out}")
    else:
        print(text)


def _cmd_ssim(args) -> int:
    if args.pair:
        model_a = _load_model_dir(args.pair[0])
        model_b = _load_model_dir(args.pair[1])
        rep = agg.pairwise_cumulative_ssim(model_a, model_b)
        _emit(rep.to_json(), args.out)
        if args.plot:
            from . import report

            report.save_ssim_figure(rep, args.plot, title="single-class SSIM")
            print(f"wrote {args.plot}")
    else:
        model = _load_model_dir(args.self)
        pairs = agg.self_ssim_pairs(model)
        mean = agg.model_self_ssim(model)
        body = ", ".join(f'"{k}": {v:.6f}' for k, v in sorted(pairs.items()))
        _emit(f'{{"pairs": {{{body}}}, "mean": {mean:.6f}}}', args.out)
        if args.plot:
            from . import report

            rep = agg.SsimReport(per_class=pairs, mean=mean, sum=float(sum(pairs.values())))
            report.save_ssim_figure(rep, args.plot, title="self SSIM (class pairs)")
            print(f"wrote {args.plot}")
    return 0


def _cmd_fuse_mask(args) -> int:
    hm_a = tensorio.read_heatmap(args.heatmap_a)
    hm_b = tensorio.read_heatmap(args.heatmap_b)
    mask = masking.fuse_masks(hm_a, hm_b, threshold=args.threshold)
    if args.upsample:
        mask = masking.upsample_mask(mask, args.upsample[0], args.upsample[1])
    sources = args.source_models.split(",") if args.source_models else [
        Path(args.heatmap_a).stem,
        Path(args.heatmap_b).stem,
    ]
    masking.save_mask_png(mask, args.out, class_label=args.label, threshold=args.threshold, source_models=sources)
    kept = int(mask.sum())
    print(f"wrote {args.out} (threshold {args.threshold}, {kept}/{mask.size} pixels kept)")
    return 0


def _cmd_mask_dataset(args) -> int:
    manifest = read_manifest(args.manifest)
    masks_dir = Path(args.masks)
    masks = {}
    for label in manifest.labels():
        mask_path = masks_dir / f"{label}.png"
        if mask_path.is_file():
            masks[label] = masking.load_mask_png(mask_path)
    out_manifest = masking.mask_dataset(manifest, masks, args.out)
    out_path = Path(args.out) / "manifest.jsonl"
    write_manifest(out_manifest, out_path)
    print(f"wrote {len(out_manifest.entries)} masked samples under {args.out}")
    print(f"wrote {out_path}")
    return 0


def _read_label_csv(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["id", "label"]:
        raise MalvisError(f"{path}: expected CSV header 'id,label'")
    out: dict[str, str] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise MalvisError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        if row[0] in out:
            raise MalvisError(f"{path}:{lineno}: duplicate id {row[0]!r}")
        out[row[0]] = row[1]
    return out


def _cmd_eval(args) -> int:
    truth = _read_label_csv(args.labels)
    preds = _read_label_csv(args.preds)
    if set(truth) != set(preds):
        raise MalvisError("label and prediction files do not cover the same sample ids")
    if not truth:
        raise MalvisError("no samples to score")
    classes = sorted(set(truth.values()) | set(preds.values()))
    index = {c: i for i, c in enumerate(classes)}
    ids = sorted(truth)
    cm = metrics.confusion_matrix(
        [index[truth[i]] for i in ids], [index[preds[i]] for i in ids], len(classes)
    )
    result = metrics.classification_metrics(cm)
    _emit(metrics.metrics_to_json(result), args.out)
    if args.matrix:
        metrics.save_confusion_csv(cm, classes, args.matrix)
        print(f"wrote {args.matrix}")
    if args.plot:
        from . import report

        report.save_confusion_figure(cm, classes, args.plot)
        print(f"wrote {args.plot}")
    return 0


def _cmd_split(args) -> int:
    manifest = read_manifest(args.manifest)
    out = split_manifest(
        manifest,
        train_frac=args.train,
        val_frac_of_train=args.val,
        seed=args.seed,
        warn=lambda msg: print(f"warning: {msg}", file=sys.stderr),
    )
    write_manifest(out, args.out)
    counts = {s: sum(1 for e in out.entries if e.split == s) for s in ("train", "val", "test")}
    print(f"seed: {args.seed}")
    print(f"wrote {args.out} (train {counts['train']} / val {counts['val']} / test {counts['test']})")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="malvis", description="Malware image explainability toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", help="convert binaries to grayscale PNG images")
    p.add_argument("inputs", nargs="+", help="binary files")
    p.add_argument("-o", "--out", required=True, help="output directory (or .png path for one input)")
    p.add_argument("--width", type=int, help="image width in pixels (default: from size table)")
    p.add_argument("--resize", type=_size, metavar="WxH", help="bilinear resize after conversion")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("entropy", help="sliding-window Shannon entropy profile of a binary")
    p.add_argument("input", help="binary file")
    p.add_argument("-o", "--out", required=True, help="output CSV (offset,entropy)")
    p.add_argument("--window", type=int, default=imagegen.DEFAULT_WINDOW)
    p.add_argument("--stride", type=int, default=imagegen.DEFAULT_STRIDE)
    p.add_argument("--plot", help="also render the profile as a PNG figure")
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("explain", help="compute a heatmap from feature and gradient stacks")
    p.add_argument("--method", choices=("gradcam", "hirescam"), required=True)
    p.add_argument("features", help="feature stack (.npy, shape F x D1 x D2)")
    p.add_argument("gradients", help="gradient stack (.npy, same shape)")
    p.add_argument("-o", "--out", required=True, help="output heatmap (.npy)")
    p.add_argument("--upsample", type=_size, metavar="WxH", help="bilinear upsample of the heatmap")
    p.add_argument("--png", help="also write the heatmap as 8-bit PNG")
    p.add_argument("--plot", help="also render a figure (overlay if --image is given)")
    p.add_argument("--image", help="source image for the --plot overlay")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("aggregate", help="average per-sample heatmaps into a class cumulative heatmap")
    p.add_argument("heatmaps", nargs="+", help="heatmap .npy files of one class")
    p.add_argument("--label", required=True, help="class label")
    p.add_argument("-o", "--out", required=True, help="output cumulative heatmap (.npy; sidecar .json)")
    p.add_argument("--png", help="also write the map as 8-bit PNG")
    p.add_argument("--plot", help="also render a figure (overlay if --image is given)")
    p.add_argument("--image", help="source image for the --plot overlay")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("ssim", help="SSIM agreement between models' cumulative heatmaps")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--pair", nargs=2, metavar=("DIR_A", "DIR_B"),
                      help="two model directories of per-class cumulative heatmaps")
    mode.add_argument("--self", metavar="DIR", help="one model directory; SSIM across its own classes")
    p.add_argument("-o", "--out", help="output JSON (default: stdout)")
    p.add_argument("--plot", help="also render per-class SSIM bars as a PNG figure")
    p.set_defaults(func=_cmd_ssim)

    p = sub.add_parser("fuse-mask", help="threshold two cumulative heatmaps and OR them into a mask")
    p.add_argument("heatmap_a", help="first cumulative heatmap (.npy)")
    p.add_argument("heatmap_b", help="second cumulative heatmap (.npy)")
    p.add_argument("-o", "--out", required=True, help="output mask (1-bit PNG; sidecar .json)")
    p.add_argument("--threshold", type=float, default=masking.DEFAULT_THRESHOLD,
                   help="keep pixels where either map >= threshold (default 0.3)")
    p.add_argument("--label", help="class label recorded in the sidecar")
    p.add_argument("--upsample", type=_size, metavar="WxH", help="nearest-neighbor upsample of the mask")
    p.add_argument("--source-models", help="comma-separated model names for the sidecar")
    p.set_defaults(func=_cmd_fuse_mask)

    p = sub.add_parser("mask-dataset", help="apply per-class masks to every sample in a manifest")
    p.add_argument("manifest", help="input manifest (.jsonl)")
    p.add_argument("masks", help="directory of <classLabel>.png masks")
    p.add_argument("-o", "--out", required=True, help="output dataset root (mirrors input layout)")
    p.set_defaults(func=_cmd_mask_dataset)

    p = sub.add_parser("eval", help="confusion matrix and metrics from label/prediction CSVs")
    p.add_argument("labels", help="ground-truth CSV (id,label)")
    p.add_argument("preds", help="prediction CSV (id,label)")
    p.add_argument("-o", "--out", help="output metrics JSON (default: stdout)")
    p.add_argument("--matrix", help="also write the confusion matrix as CSV")
    p.add_argument("--plot", help="also render the confusion matrix as a PNG figure")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("split", help="stratified train/val/test assignment for a manifest")
    p.add_argument("manifest", help="input manifest (.jsonl)")
    p.add_argument("-o", "--out", required=True, help="output manifest (.jsonl)")
    p.add_argument("--train", type=float, default=DEFAULT_TRAIN_FRAC, help="train fraction (default 0.7)")
    p.add_argument("--val", type=float, default=DEFAULT_VAL_FRAC,
                   help="validation fraction of the train pool (default 0.1)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="shuffle seed (default 42)")
    p.set_defaults(func=_cmd_split)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage error (1) or --help (0)
        return int(exc.code or 0)
    try:
        return args.func(args)
    except MalvisError as exc:
        print(f"malvis: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"malvis: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
