"""Command line entry point: ``charspot <command> ...``.

Exit codes: 0 success, 2 usage error, 3 missing input, 4 malformed input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import formats
from .annotation import AnnotationError
from .config import PipelineConfig
from .densemaps import char_candidate_arrays, encode_ground_truth, word_candidate_arrays
from .detections import CharDetection, WordDetection
from .evaluation import evaluate_dataset
from .geometry import RotatedBox
from .harvest import DatasetState, improving_oracle_factory, run_iterations
from .lexicon import LexiconError, LexiconSet
from .postprocess import nms, spot
from .synthgen import SynthConfig, corpus_seeds, generate_scene

log = logging.getLogger("charspot")

EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_FORMAT = 4


class UsageError(Exception):
    pass


def _stem(path: Path) -> str:
    name = path.name
    for suffix in (".pred.json", ".det.json", ".json", ".cnmp"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _collect(inputs, pattern) -> list[Path]:
    out = []
    for p in map(Path, inputs):
        if p.is_dir():
            out.extend(sorted(p.glob(pattern)))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(p)
    return out


def _run(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


# -- library-level operations shared by the commands -------------------------


def decode_stack(stack, cfg: PipelineConfig):
    """NMS-filtered word and character detections of one map stack."""
    wc = word_candidate_arrays(stack, cfg.word_gate)
    words = [WordDetection(RotatedBox.from_array(wc.boxes[i]), float(wc.scores[i])) for i in nms(wc.boxes, wc.scores, cfg.nms_iou)]
    cc, labels = char_candidate_arrays(stack, cfg.char_gate)
    chars = [
        CharDetection(RotatedBox.from_array(cc.boxes[i]), float(cc.scores[i]), int(labels[i]))
        for i in nms(cc.boxes, cc.scores, cfg.nms_iou)
    ]
    return words, chars


def e2e_stack(stack, cfg: PipelineConfig):
    return spot(stack, cfg.word_gate, cfg.char_gate, cfg.nms_iou, cfg.get_charset()).instances


def _encode_job(job):
    src, dst, cfg = job
    ann = formats.read_annotation(src, cfg.get_charset())
    formats.write_tensor(dst, encode_ground_truth(ann, cfg.stride, cfg.shrink))
    return str(dst)


def _decode_job(job):
    src, out, cfg, svg = job
    stack = formats.read_tensor(src, cfg.stride)
    words, chars = decode_stack(stack, cfg)
    cs = cfg.get_charset()
    dst = out / f"{_stem(src)}.det.json"
    dst.write_text(json.dumps(formats.detections_to_json(words, chars, cs), indent=1) + "\n")
    if svg:
        from .plotting import draw_overlay

        size = (stack.width * stack.stride, stack.height * stack.stride)
        draw_overlay(out / f"{_stem(src)}.svg", size, words=words, chars=chars, charset=cs)
    return str(dst)


def _e2e_job(job):
    src, out, cfg, svg, icdar = job
    stack = formats.read_tensor(src, cfg.stride)
    cs = cfg.get_charset()
    inst = e2e_stack(stack, cfg)
    dst = out / f"{_stem(src)}.pred.json"
    formats.write_predictions(dst, inst, cs)
    if icdar:
        (out / f"{_stem(src)}.txt").write_text(formats.icdar_lines(inst))
    if svg:
        from .plotting import draw_overlay

        size = (stack.width * stack.stride, stack.height * stack.stride)
        chars = [c for t in inst for c in t.chars]
        draw_overlay(out / f"{_stem(src)}.svg", size, chars=chars, instances=inst, charset=cs)
    return str(dst)


def load_lexicons(cfg: PipelineConfig, strong_dir=None, weak=None, generic=None) -> LexiconSet:
    strong_dir = strong_dir or cfg.strong_lexicon_dir
    weak = weak or cfg.weak_lexicon
    generic = generic or cfg.generic_lexicon
    strong = {}
    if strong_dir:
        d = Path(strong_dir)
        if not d.is_dir():
            raise FileNotFoundError(d)
        strong = {p.stem: formats.read_word_list(p) for p in sorted(d.glob("*.txt"))}
    return LexiconSet(
        strong=strong,
        weak=formats.read_word_list(weak) if weak else (),
        generic=formats.read_word_list(generic) if generic else (),
    )


# -- commands ------------------------------------------------------------------


def cmd_synth(args, cfg):
    scfg = SynthConfig(
        image_size=tuple(args.image_size),
        instance_count=tuple(args.instances),
        word_length=tuple(args.word_length),
        curved_fraction=args.curved,
        dont_care_fraction=args.dont_care,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cs = cfg.get_charset()
    for i, s in enumerate(corpus_seeds(args.seed, args.n)):
        scene = generate_scene(replace(scfg, seed=s), cs)
        formats.write_annotation(out / f"scene_{i:05d}.json", scene, cs)
        if args.maps:
            formats.write_tensor(out / f"scene_{i:05d}.cnmp", encode_ground_truth(scene, cfg.stride, cfg.shrink))
    print(f"wrote {args.n} scenes to {out}")


def cmd_encode(args, cfg):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = _collect(args.inputs, "*.json")
    _run(_encode_job, [(f, out / f"{_stem(f)}.cnmp", cfg) for f in files], args.workers)
    print(f"encoded {len(files)} annotations into {out}")


def cmd_decode(args, cfg):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = _collect(args.inputs, "*.cnmp")
    _run(_decode_job, [(f, out, cfg, args.svg) for f in files], args.workers)
    print(f"decoded {len(files)} tensors into {out}")


def cmd_e2e(args, cfg):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = _collect(args.inputs, "*.cnmp")
    _run(_e2e_job, [(f, out, cfg, args.svg, args.icdar) for f in files], args.workers)
    print(f"spotted text in {len(files)} tensors into {out}")


def cmd_harvest(args, cfg):
    cs = cfg.get_charset()
    files = _collect(args.inputs, "*.json")
    truth = [formats.read_annotation(f, cs) for f in files]
    state = DatasetState(truth)
    factory = improving_oracle_factory(
        truth,
        start_miss=args.miss_rate,
        full_at=args.full_at,
        spurious_rate=args.spurious_rate,
        center_jitter_px=args.jitter,
        size_jitter_frac=args.size_jitter,
        seed=args.seed,
    )
    run_iterations(state, factory, args.steps, early_stop=args.early_stop, nms_iou=cfg.nms_iou, charset=cs)
    out = Path(args.out)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    for f, scene in zip(files, state.harvested_scenes()):
        formats.write_annotation(out / "labels" / f"{_stem(f)}.json", scene, cs)
    formats.write_stats_csv(out / "stats.csv", state.stats)
    if args.plot:
        from .plotting import plot_harvest_stats

        plot_harvest_stats(out / "stats.png", state.stats)
    for s in state.stats:
        print(f"step {s.step}: {s.words_accepted}/{s.words_total} words accepted ({100 * s.ratio:.2f}%)")
    for step, img, msg in state.skipped:
        print(f"step {step}: skipped image {img}: {msg}", file=sys.stderr)


def _gt_key(path: Path) -> str:
    return _stem(path)


def cmd_eval(args, cfg):
    if args.mode != "N" and not (args.strong_dir or args.weak or args.generic or
                                 cfg.strong_lexicon_dir or cfg.weak_lexicon or cfg.generic_lexicon):
        raise UsageError(f"mode {args.mode} needs a lexicon (--strong-dir, --weak or --generic)")
    cs = cfg.get_charset()
    gts = {_gt_key(f): formats.read_annotation(f, cs) for f in _collect(args.gt, "*.json")}
    preds = {_stem(f): formats.read_predictions(f) for f in _collect(args.pred, "*.pred.json")}
    lex = load_lexicons(cfg, args.strong_dir, args.weak, args.generic)
    try:
        report = evaluate_dataset(preds, gts, lex, args.mode, args.iou or cfg.eval_iou)
    except LexiconError as exc:
        raise UsageError(str(exc)) from None
    doc = report.to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    print(report.table())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="charspot", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="PipelineConfig JSON file")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic annotation corpus")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--image-size", type=int, nargs=2, default=(512, 512), metavar=("W", "H"))
    s.add_argument("--instances", type=int, nargs=2, default=(1, 10), metavar=("MIN", "MAX"))
    s.add_argument("--word-length", type=int, nargs=2, default=(2, 8), metavar=("MIN", "MAX"))
    s.add_argument("--curved", type=float, default=0.15)
    s.add_argument("--dont-care", type=float, default=0.0)
    s.add_argument("--maps", action="store_true", help="also write ground-truth tensors")

    for name, hlp in (("encode", "annotation JSON -> ground-truth tensor"),
                      ("decode", "tensor -> word/char detections JSON"),
                      ("e2e", "tensor -> text instances with transcriptions")):
        c = sub.add_parser(name, help=hlp)
        c.add_argument("inputs", nargs="+")
        c.add_argument("--out", required=True)
        c.add_argument("--workers", type=int, default=1)
        if name != "encode":
            c.add_argument("--svg", action="store_true", help="write an SVG overlay per image")
        if name == "e2e":
            c.add_argument("--icdar", action="store_true", help="also write ICDAR-style .txt results")

    h = sub.add_parser("harvest", help="iterative character harvesting with an oracle detector")
    h.add_argument("inputs", nargs="+")
    h.add_argument("--out", required=True)
    h.add_argument("--steps", type=int, default=4)
    h.add_argument("--miss-rate", type=float, default=0.15)
    h.add_argument("--full-at", type=float, default=0.6)
    h.add_argument("--spurious-rate", type=float, default=0.0)
    h.add_argument("--jitter", type=float, default=0.0)
    h.add_argument("--size-jitter", type=float, default=0.0)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--early-stop", action="store_true")
    h.add_argument("--plot", action="store_true", help="write stats.png")

    e = sub.add_parser("eval", help="detection and end-to-end scoring")
    e.add_argument("--pred", nargs="+", required=True)
    e.add_argument("--gt", nargs="+", required=True)
    e.add_argument("--mode", choices=("S", "W", "G", "N"), default="N")
    e.add_argument("--strong-dir")
    e.add_argument("--weak")
    e.add_argument("--generic")
    e.add_argument("--iou", type=float)
    e.add_argument("--out", help="report JSON path")
    return p


COMMANDS = {
    "synth": cmd_synth,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "e2e": cmd_e2e,
    "harvest": cmd_harvest,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
        if getattr(args, "steps", 1) < 1 or getattr(args, "n", 0) < 0:
            raise UsageError("counts must be non-negative (steps >= 1)")
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"charspot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"charspot: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (formats.TensorFormatError, formats.AnnotationFormatError, AnnotationError, json.JSONDecodeError) as exc:
        print(f"charspot: malformed input: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ValueError as exc:
        print(f"charspot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
