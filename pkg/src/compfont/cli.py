"""Command-line entry point: ``compfont <command> ...``."""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import torch

from .errors import CompfontError, MissingComponent
from .scripts import get_schema

logger = logging.getLogger("compfont")


def _schema_arg(p):
    p.add_argument("--script", default="korean", help="built-in schema name or schema JSON path")


def _read_chars(args, schema):
    text = ""
    if args.chars_file:
        text = Path(args.chars_file).read_text(encoding="utf-8")
    if args.text:
        text += args.text
    chars = _split_chars(schema, text)
    if not chars:
        raise ValueError("no characters requested")
    return chars


def _split_chars(schema, text):
    """Split text into schema characters (Thai clusters may span several codepoints)."""
    out, i, text = [], 0, "".join(text.split())
    while i < len(text):
        for n in range(min(len(text) - i, schema.num_types), 0, -1):
            if schema.is_valid(text[i:i + n]):
                out.append(text[i:i + n])
                i += n
                break
        else:
            schema.decompose(text[i])  # raises the specific error
            i += 1
    return list(dict.fromkeys(out))


def _load_refs(path, schema, image_size, style):
    from .data import GlyphImage, load_glyph_dir

    return [GlyphImage(px, c, style) for c, px in load_glyph_dir(path, schema, image_size).items()]


def _missing(schema, refs, char):
    have = {l for g in refs for l in schema.decompose(g.char)}
    return [l for l in schema.decompose(char) if not schema.is_null(l) and l not in have]


@torch.no_grad()
def _decode_one(generator, dm, char, style, mix=None):
    # decoded one glyph at a time so every output is independent of batch composition
    return generator.decoder(*generator.memory_features(dm, [char], [style], mix))[0, 0].cpu().numpy()


# -- commands ----------------------------------------------------------------------


def cmd_decompose(args):
    schema = get_schema(args.script)
    for char in _split_chars(schema, args.text):
        labels = schema.decompose(char)
        names = " ".join(schema.name(l) for l in labels)
        idx = ",".join(str(l.component_index) for l in labels)
        print(f"{char}\t{names}\t({idx})")


def cmd_split(args):
    from .data import ingest, make_split

    dataset = ingest(args.data_root, get_schema(args.script), args.image_size, args.skip_unreadable)
    split = make_split(dataset, args.font_ratio, args.char_ratio, args.seed or 0)
    split.save(args.out)
    print(f"{len(split.train_fonts)} train / {len(split.eval_fonts)} eval fonts, "
          f"{len(split.seen_chars)} seen / {len(split.unseen_chars)} unseen chars -> {args.out}")


def _train_config(args):
    from .config import TrainConfig

    config = TrainConfig.load(args.config) if args.config else TrainConfig.preset(args.profile)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.data_root:
        overrides["data"] = {"root": args.data_root}
    if args.split:
        overrides.setdefault("data", {})["split_file"] = args.split
    if overrides:
        d = config.to_dict()
        for k, v in overrides.items():
            d[k] = {**d[k], **v} if isinstance(v, dict) else v
        config = TrainConfig.from_dict(d)
    return config


def cmd_train(args):
    from .data import DatasetSplit, ingest, make_split
    from .training import train

    config = _train_config(args)
    dc = config.data
    if not dc.root:
        raise ValueError("no data root: pass --data-root or set data.root in the config")
    schema = get_schema(dc.script)
    dataset = ingest(dc.root, schema, config.model.image_size, dc.skip_unreadable)
    split = (DatasetSplit.load(dc.split_file) if dc.split_file
             else make_split(dataset, dc.font_ratio, dc.char_ratio, config.seed))
    last = train(dataset, split, config, args.out, resume=not args.no_resume)
    print(f"checkpoint: {last}")


def cmd_train_classifier(args):
    from .data import ingest
    from .eval import ClassifierConfig, train_eval_classifier

    dataset = ingest(args.data_root, get_schema(args.script), args.image_size, args.skip_unreadable)
    cfg = ClassifierConfig(depth=args.depth, width=args.width, epochs=args.epochs,
                           accuracy_floor=args.floor, seed=args.seed or 0)
    clf = train_eval_classifier(dataset, args.target, cfg)
    clf.save(args.out)
    print(f"{args.target} classifier: {len(clf.labels)} classes, "
          f"validation accuracy {clf.val_accuracy:.4f} -> {args.out}")


def cmd_generate(args):
    from .data import char_to_filename, write_image
    from .training import load_generator

    generator, schema, config = load_generator(args.checkpoint)
    style = args.style or Path(args.refs).name
    refs = _load_refs(args.refs, schema, config.model.image_size, style)
    chars = _read_chars(args, schema)
    ready, blocked = [], {}
    for c in chars:
        missing = _missing(schema, refs, c)
        if missing:
            blocked[c] = missing
        else:
            ready.append(c)
    if blocked and not args.partial:
        c, missing = next(iter(blocked.items()))
        raise MissingComponent(missing[0], style, schema.name(missing[0]))
    dm = generator.new_memory()
    if generator.use_dm:
        with torch.no_grad():
            generator.encode_glyphs(dm, refs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for c in ready:
        write_image(out / char_to_filename(c), _decode_one(generator, dm, c, style))
    print(f"generated {len(ready)} glyphs -> {out}")
    if blocked:
        print(f"blocked {len(blocked)}: " + "; ".join(
            f"{c} (missing {', '.join(schema.name(l) for l in m)})" for c, m in blocked.items()))
        if not ready:
            first = next(iter(blocked.values()))[0]
            raise MissingComponent(first, style, schema.name(first))


def cmd_mix(args):
    from .data import char_to_filename, write_image
    from .eval import write_grid
    from .training import load_generator

    generator, schema, config = load_generator(args.checkpoint)
    style_a = args.style_a or Path(args.refs_a).name
    style_b = args.style_b or Path(args.refs_b).name
    if style_a == style_b:
        style_b = style_b + "~b"
    size = config.model.image_size
    refs = _load_refs(args.refs_a, schema, size, style_a) + _load_refs(args.refs_b, schema, size, style_b)
    alphas = [float(a) for a in str(args.alphas).split(",") if a.strip()]
    if not alphas:
        raise ValueError("no alphas given")
    char = _split_chars(schema, args.char)
    if len(char) != 1:
        raise ValueError(f"mix takes exactly one character, got {args.char!r}")
    char = char[0]
    dm = generator.new_memory()
    with torch.no_grad():
        generator.encode_glyphs(dm, refs)
        generator.mixed_memory(dm, char, style_a, style_b, args.type_index, alphas[0])  # validates
    out = Path(args.out)
    frames = []
    for a in alphas:
        generator.mixed_memory(dm, char, style_a, style_b, args.type_index, a)
        img = _decode_one(generator, dm, char, style_a, (args.type_index, style_b, a))
        write_image(out / f"alpha_{a:g}" / char_to_filename(char), img)
        frames.append(img)
    write_grid([frames], out / "strip.png")
    print(f"{len(frames)} frames -> {out / 'strip.png'}")


def cmd_evaluate(args):
    from .data import DatasetSplit, ingest
    from .eval import EvalClassifier, EvalConfig, evaluate
    from .training import load_checkpoint

    ck = load_checkpoint(args.checkpoint)
    image_size = ck["config"]["model"]["image_size"]
    schema_name = args.script or ck["config"]["data"]["script"]
    dataset = ingest(args.data_root, get_schema(schema_name), image_size)
    split = DatasetSplit.load(args.split)
    clfs = {}
    if args.content_clf:
        clfs["content"] = EvalClassifier.load(args.content_clf)
    if args.style_clf:
        clfs["style"] = EvalClassifier.load(args.style_clf)
    cfg = EvalConfig(n_references=args.n_references, seed=args.seed or 0)
    report = evaluate(args.checkpoint, dataset, split, clfs, cfg)
    print(report.format_table())
    if args.out:
        report.save(args.out)


def cmd_synth(args):
    from .data import write_dataset
    from .data.synthetic import compact_charset, make_corpus

    schema = get_schema(args.script)
    chars = compact_charset(schema, args.n_chars, args.seed or 0)
    ds = make_corpus(schema, chars, args.n_fonts, image_size=args.image_size, seed=args.seed or 0)
    write_dataset(ds, args.out)
    print(f"{args.n_fonts} fonts x {len(chars)} chars -> {args.out}")


def cmd_render(args):
    from .data.render import rasterize_to_dir

    schema = get_schema(args.script)
    chars = _read_chars(args, schema)
    print(rasterize_to_dir(args.font, chars, args.out, args.font_id, args.image_size))


# -- parser ------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="compfont", description="Few-shot compositional font generation.")
    p.add_argument("--seed", type=int, default=None, help="the single source of randomness")
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("decompose", help="print the component labels of each character")
    s.add_argument("text")
    _schema_arg(s)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("split", help="write a font/character split file")
    s.add_argument("--data-root", required=True)
    s.add_argument("--font-ratio", type=float, default=0.8)
    s.add_argument("--char-ratio", type=float, default=0.9)
    s.add_argument("--image-size", type=int, default=128)
    s.add_argument("--skip-unreadable", action="store_true")
    s.add_argument("--out", required=True)
    _schema_arg(s)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("train", help="train (or resume) a generator")
    s.add_argument("--profile", default="korean")
    s.add_argument("--data-root")
    s.add_argument("--split")
    s.add_argument("--iterations", type=int)
    s.add_argument("--no-resume", action="store_true")
    s.add_argument("--out", required=True, help="checkpoint directory")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("train-classifier", help="train a content or style evaluation classifier")
    s.add_argument("--data-root", required=True)
    s.add_argument("--target", choices=("content", "style"), required=True)
    s.add_argument("--depth", type=int, default=18, choices=(18, 34, 50))
    s.add_argument("--width", type=int, default=16)
    s.add_argument("--epochs", type=int, default=20)
    s.add_argument("--floor", type=float, default=0.9)
    s.add_argument("--image-size", type=int, default=128)
    s.add_argument("--skip-unreadable", action="store_true")
    s.add_argument("--out", required=True)
    _schema_arg(s)
    s.set_defaults(func=cmd_train_classifier)

    s = sub.add_parser("generate", help="generate glyphs in the style of a reference directory")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--refs", required=True, help="directory of <codepoint>.png reference glyphs")
    s.add_argument("--chars-file")
    s.add_argument("--text")
    s.add_argument("--style")
    s.add_argument("--partial", action="store_true", help="skip characters the references cannot cover")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("evaluate", help="four-cell evaluation report")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data-root", required=True)
    s.add_argument("--split", required=True)
    s.add_argument("--content-clf")
    s.add_argument("--style-clf")
    s.add_argument("--n-references", type=int, default=30)
    s.add_argument("--script")
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("mix", help="interpolate one component type between two styles")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--refs-a", required=True)
    s.add_argument("--refs-b", required=True)
    s.add_argument("--style-a")
    s.add_argument("--style-b")
    s.add_argument("--char", required=True)
    s.add_argument("--type-index", type=int, required=True)
    s.add_argument("--alphas", default="0,0.25,0.5,0.75,1")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mix)

    s = sub.add_parser("synth", help="write a procedural toy corpus")
    s.add_argument("--n-fonts", type=int, default=4)
    s.add_argument("--n-chars", type=int, default=60)
    s.add_argument("--image-size", type=int, default=64)
    s.add_argument("--out", required=True)
    _schema_arg(s)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("render", help="rasterize a TrueType/OpenType font into a glyph directory")
    s.add_argument("--font", required=True)
    s.add_argument("--font-id")
    s.add_argument("--chars-file")
    s.add_argument("--text")
    s.add_argument("--image-size", type=int, default=128)
    s.add_argument("--out", required=True)
    _schema_arg(s)
    s.set_defaults(func=cmd_render)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None:
        torch.manual_seed(args.seed)
        np.random.seed(args.seed)
    if args.command != "train" and args.config:
        logger.warning("--config only applies to train")
    try:
        args.func(args)
    except CompfontError as e:
        print(f"error: {e.code}: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as e:
        msg = str(e).replace("\n", " ")
        print(f"error: {type(e).__name__}: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
