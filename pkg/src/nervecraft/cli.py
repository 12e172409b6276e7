"""Command line entry point: ``nervecraft <command> --config cfg.json --out dir``."""
from __future__ import annotations

import argparse
import json
import sys

from . import pipeline
from .errors import NervecraftError

EXIT_OK, EXIT_HYPOTHESIS, EXIT_INVARIANT, EXIT_INPUT = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="nervecraft", description=__doc__)
    p.add_argument("command", choices=["constants", "cover", "verify", "theorem1", "norm-bound"])
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("-n", type=int, help="dimension (constants only; overrides config)")
    p.add_argument("--quiet", action="store_true")
    return p


def run(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "constants" and args.config is None:
        if args.n is None:
            raise pipeline.InputError("constants needs -n or a config with 'n'")
        cfg = None
    else:
        if args.config is None:
            raise pipeline.InputError("--config is required")
        cfg = pipeline.load_config(args.config)
        if args.out:
            cfg.output_dir = args.out
    if args.command == "constants":
        n = args.n if args.n is not None else (cfg.n if cfg.n is not None else None)
        if n is None:
            raise pipeline.InputError("constants needs 'n'")
        beta = cfg.beta if cfg else None
        out = pipeline.cmd_constants(n, beta)
        pipeline._write_json(args.out, "constants.json", out)
        return out, EXIT_OK
    fn = {"cover": pipeline.cmd_cover, "verify": pipeline.cmd_verify,
          "theorem1": pipeline.cmd_theorem1, "norm-bound": pipeline.cmd_norm_bound}[args.command]
    return fn(cfg)


def main(argv=None):
    try:
        out, code = run(argv)
    except NervecraftError as exc:
        print(f"nervecraft: {type(exc).__name__}: {exc}", file=sys.stderr)
        witness = getattr(exc, "witness", None)
        if witness is not None:
            print(json.dumps(witness, default=str), file=sys.stderr)
        return exc.exit_code
    if "--quiet" not in (argv or sys.argv[1:]):
        print(json.dumps(_summary(out), indent=1, sort_keys=True, default=str))
    return code


def _summary(out):
    keep = ("passed", "hypothesis_met", "conclusion", "V1_scaled", "delta_n", "epsilon",
            "sum_abs_c", "norm_bound_holds", "validation")
    s = {k: out[k] for k in keep if k in out}
    if "certificate" in out and out["certificate"]:
        s["certificate_kind"] = out["certificate"]["kind"]
    return s or out


if __name__ == "__main__":
    sys.exit(main())
