"""Command line entry point.

Subcommands cover the full workflow: preprocess media, train the two stages,
synthesize audio for a silent video, evaluate, export figure artifacts, and
run the gradient verification suite.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numeric
abort.  Diagnostics go to stderr; results go to files.
"""

import argparse
import sys
from pathlib import Path

from .errors import NumericError, SsynError
from .pipeline.config import Config, load_config

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_EPILOG = ("Only .y4m/.rvid video and 16-bit PCM .wav audio are read. "
           "Transcode compressed media first, e.g.\n"
           "  ffmpeg -i input.mp4 -pix_fmt yuv420p clip.y4m\n"
           "  ffmpeg -i input.mp4 -ac 1 -ar 8000 clip.wav")


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems with exit status 2; this tool reserves
    2 for data errors, so usage errors are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config(args) -> Config:
    config = load_config(args.config) if args.config else Config().validate()
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "epochs", None) is not None:
        config.epochs = args.epochs
    return config.validate()


def _cmd_preprocess(args):
    from .media import write_rvid, write_wav, read_wav
    from .pipeline.inference import read_video
    from .pipeline.training import preprocess_clip

    config = _load_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    clip = preprocess_clip(config, read_video(args.video))
    stem = Path(args.video).stem
    write_rvid(clip, out_dir / f"{stem}.rvid")
    print(f"wrote {out_dir / (stem + '.rvid')}", file=sys.stderr)
    if args.audio:
        audio = read_wav(args.audio)
        if audio.sample_rate != config.sample_rate:
            raise SsynError(
                f"{args.audio}: sample rate {audio.sample_rate} != configured "
                f"{config.sample_rate}; resample with ffmpeg -ar {config.sample_rate}"
            )
        write_wav(audio, out_dir / f"{stem}.wav")
        print(f"wrote {out_dir / (stem + '.wav')}", file=sys.stderr)


def _cmd_train_encoder(args):
    from .pipeline.training import train_encoder

    config = _load_config(args)
    _, log = train_encoder(config, args.data, args.out)
    last = log.rows[-1]
    print(f"trained encoder: {last['step']} steps, final total loss {last['total']:.6f}; "
          f"checkpoints in {args.out}", file=sys.stderr)


def _cmd_train_decoder(args):
    from .pipeline.training import train_decoder

    config = _load_config(args)
    _, log = train_decoder(config, args.data, args.ckpt, args.out)
    last = log.rows[-1]
    print(f"trained decoder: {last['step']} steps, final audio mse {last['total']:.6f}; "
          f"checkpoints in {args.out}", file=sys.stderr)


def _cmd_infer(args):
    from .pipeline.inference import infer

    config = _load_config(args)
    audio = infer(config, args.ckpt, args.video, args.out)
    print(f"wrote {args.out} ({audio.num_samples} samples at {audio.sample_rate} Hz)",
          file=sys.stderr)


def _cmd_eval(args):
    from .pipeline.inference import evaluate

    config = _load_config(args)
    metrics = evaluate(config, args.ckpt, args.data)
    lines = [f"{key} = {value}" for key, value in sorted(metrics.items())]
    if args.out:
        from .ioutil import atomic_write_text
        atomic_write_text(args.out, "\n".join(lines) + "\n")
    for line in lines:
        print(line, file=sys.stderr)


def _cmd_export_artifacts(args):
    from .pipeline.inference import export_artifacts

    config = _load_config(args)
    written = export_artifacts(config, args.ckpt, args.video, args.out)
    print(f"wrote {len(written)} artifact files to {args.out}", file=sys.stderr)


def _cmd_grad_check(args):
    from .ndtensor.gradcheck import verification_suite

    seed = args.seed if args.seed is not None else 0
    results = verification_suite(seed=seed)
    worst = 0.0
    for name, err in results:
        print(f"{name:24s} max rel err {err:.3e}", file=sys.stderr)
        worst = max(worst, err)
    if worst >= 1e-3:
        raise NumericError(f"gradient verification failed: worst relative error {worst:.3e}")
    print(f"all {len(results)} checks passed (worst {worst:.3e})", file=sys.stderr)


def _add(sub, name, func, flags):
    p = sub.add_parser(name, epilog=_EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       help=_HELP[name])
    for flag in flags:
        kind = _FLAGS[flag]
        p.add_argument(flag, **kind)
    p.set_defaults(func=func)
    return p


_FLAGS = {
    "--config": {"metavar": "FILE", "help": "config file (key = value lines)"},
    "--data": {"metavar": "DIR", "required": True,
               "help": "dataset directory of <name>.y4m/.rvid + <name>.wav pairs"},
    "--ckpt": {"metavar": "FILE", "required": True, "help": "checkpoint path"},
    "--video": {"metavar": "FILE", "required": True, "help": "input video (.y4m or .rvid)"},
    "--audio": {"metavar": "FILE", "help": "paired audio (.wav)"},
    "--out": {"metavar": "PATH", "required": True, "help": "output file or directory"},
    "--seed": {"type": int, "metavar": "N", "help": "override configured seed"},
    "--epochs": {"type": int, "metavar": "N", "help": "override configured epoch count"},
}

_HELP = {
    "preprocess": "resize/resample media into training-ready .rvid/.wav files",
    "train-encoder": "stage one: fit the video discretizer",
    "train-decoder": "stage two: fit the audio decoder against a frozen encoder",
    "infer": "synthesize a WAV for a silent video",
    "eval": "report audio/video MSE and codebook usage on a dataset",
    "export-artifacts": "write input/reconstruction frames and code-grid images",
    "grad-check": "run the gradient verification suite",
}


def build_parser() -> _Parser:
    parser = _Parser(prog="ssyn", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _add(sub, "preprocess", _cmd_preprocess, ["--config", "--video", "--audio", "--out"])
    _add(sub, "train-encoder", _cmd_train_encoder,
         ["--config", "--data", "--out", "--seed", "--epochs"])
    _add(sub, "train-decoder", _cmd_train_decoder,
         ["--config", "--data", "--ckpt", "--out", "--seed", "--epochs"])
    _add(sub, "infer", _cmd_infer, ["--config", "--ckpt", "--video", "--out"])
    eval_p = sub.add_parser("eval", epilog=_EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter,
                            help=_HELP["eval"])
    eval_p.add_argument("--config", metavar="FILE", help=_FLAGS["--config"]["help"])
    eval_p.add_argument("--ckpt", metavar="FILE", required=True, help=_FLAGS["--ckpt"]["help"])
    eval_p.add_argument("--data", metavar="DIR", required=True, help=_FLAGS["--data"]["help"])
    eval_p.add_argument("--out", metavar="PATH", help="optional metrics output file")
    eval_p.set_defaults(func=_cmd_eval)
    _add(sub, "export-artifacts", _cmd_export_artifacts,
         ["--config", "--ckpt", "--video", "--out"])
    grad_p = sub.add_parser("grad-check", epilog=_EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter,
                            help=_HELP["grad-check"])
    grad_p.add_argument("--seed", type=int, metavar="N", help="seed for random test instances")
    grad_p.set_defaults(func=_cmd_grad_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
        return EXIT_OK
    except NumericError as exc:
        print(f"ssyn: numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SsynError as exc:
        print(f"ssyn: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"ssyn: error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
