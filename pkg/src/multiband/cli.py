"""Command-line driver.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import experiments as ex
from . import io
from .errors import ConfigError, DataError, MultibandError
from .metrics import nmse_db
from .reconstruction import reconstruct
from .sampling import SampleSet, acquire, sampling_density
from .spectral import partition_subbands, total_bandwidth

log = logging.getLogger("multiband")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", type=str)
    p.add_argument("--workers", type=int)
    p.add_argument("--ablate-drop-subband", type=int, dest="ablate_drop_subband")
    p.add_argument("-T", type=int, dest="T")
    p.add_argument("-N", type=int, dest="N")
    p.add_argument("-M", type=int, dest="M")
    p.add_argument("--ratios", type=float, nargs="+")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multiband", description="Multi-band sampling of correlated stochastic signals."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="NMSE and density across M/N ratios")
    _common(p)

    p = sub.add_parser("compare", help="multi-band vs separate per-channel sampling")
    _common(p)
    p.add_argument("--ratio", type=float, default=0.5)

    p = sub.add_parser("real", help="PCA-thresholded real-data pipeline")
    _common(p)
    p.add_argument("--corpus", type=str)
    p.add_argument("--fraction", type=float)
    p.add_argument("--variance", type=float)

    p = sub.add_parser("synth", help="write one synthetic realization")
    _common(p)

    p = sub.add_parser("acquire", help="sample an observed ensemble")
    _common(p)
    p.add_argument("--data", type=Path, required=True,
                   help="directory with specs/, mixing.csv and observed.csv")

    p = sub.add_parser("reconstruct", help="rebuild all channels from a sample set")
    _common(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--samples", type=Path, required=True)

    p = sub.add_parser("eval", help="NMSE between a reference and an estimate")
    _common(p)
    p.add_argument("--reference", type=Path, required=True)
    p.add_argument("--estimate", type=Path, required=True)
    p.add_argument("--samples", type=Path, help="sample set, to report its density")
    return parser


def _config(args) -> ex.ExperimentConfig:
    overrides = {
        k: getattr(args, k, None)
        for k in ("seed", "trials", "out", "workers", "ablate_drop_subband", "T", "N", "M",
                  "ratios", "corpus", "fraction", "variance")
    }
    if args.config is not None:
        return ex.ExperimentConfig.from_file(args.config, **overrides)
    return ex.ExperimentConfig().with_overrides(**overrides).validate()


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True, default=str))


def cmd_sweep(args) -> int:
    cfg = _config(args)
    rows = ex.sweep(cfg)
    summary = ex.write_sweep(cfg, rows)
    _emit({k: v for k, v in summary.items() if k != "config"})
    if cfg.ablate_drop_subband is None and not summary["all_bound_verified"]:
        return 4
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    rows = ex.compare(cfg, args.ratio)
    summary = ex.write_compare(cfg, rows)
    _emit({k: v for k, v in summary.items() if k != "config"})
    return 0


def cmd_real(args) -> int:
    cfg = _config(args)
    if cfg.corpus is None:
        raise ConfigError("real needs --corpus")
    if args.T is None and args.config is None:
        cfg = cfg.with_overrides(T=128)
    if args.N is None and args.config is None:
        cfg = cfg.with_overrides(N=10)
    report, pipe, Xh = ex.run_real(cfg)
    ex.write_real(cfg, report, pipe, Xh)
    _emit(report)
    return 0


def cmd_synth(args) -> int:
    cfg = _config(args)
    (_, M), = cfg.m_values()[:1]
    t = ex.generate_trial(cfg, M, 0)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_specs(out / "specs", t.specs)
    io.write_mixing_csv(out / "mixing.csv", t.U)
    io.write_ensemble_csv(out / "latent.csv", t.A)
    io.write_ensemble_csv(out / "observed.csv", t.X)
    io.write_ensemble_bin(out / "observed.bin", t.X)
    (out / "synth.json").write_text(
        json.dumps({"config": asdict(cfg), "M": M, "seeds": t.seeds,
                    "bandwidth": total_bandwidth(t.specs)}, indent=2, sort_keys=True)
    )
    _emit({"out": str(out), "M": M, "bandwidth": total_bandwidth(t.specs), **t.seeds})
    return 0


def _load_model(data: Path):
    specs = io.read_specs(data / "specs")
    U = io.read_mixing_csv(data / "mixing.csv")
    return specs, U


def cmd_acquire(args) -> int:
    cfg = _config(args)
    specs, U = _load_model(args.data)
    X = io.read_ensemble_csv(args.data / "observed.csv")
    plan = partition_subbands(specs)
    S = acquire(X, plan, U)
    if cfg.ablate_drop_subband is not None:
        S = S.drop_subband(cfg.ablate_drop_subband)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "samples.json").write_text(S.to_json())
    _emit({"samples": len(S), "density": sampling_density(S),
           "theoretical_density": total_bandwidth(specs) / (S.T * S.N)})
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    specs, U = _load_model(args.data)
    S = SampleSet.from_json(args.samples.read_text())
    plan = partition_subbands(specs)
    full = len(S) == plan.total_samples
    Xh = reconstruct(S, plan, U, real=full)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if Xh.is_complex:
        io.write_ensemble_bin(out / "reconstructed.bin", Xh)
    else:
        io.write_ensemble_csv(out / "reconstructed.csv", Xh)
        io.write_ensemble_bin(out / "reconstructed.bin", Xh)
    meta = {
        "condition_numbers": {str(k): v for k, v in Xh.meta["condition_numbers"].items()},
        "max_condition": Xh.meta["max_condition"],
        "density": sampling_density(S),
        "theoretical_density": total_bandwidth(specs) / (S.T * S.N),
    }
    observed = args.data / "observed.csv"
    if observed.exists():
        meta["nmse_db"] = nmse_db(io.read_ensemble_csv(observed), Xh)
    (out / "reconstructed.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    _emit({k: v for k, v in meta.items() if k != "condition_numbers"})
    return 0


def _read_any(path: Path):
    return io.read_ensemble_bin(path) if path.suffix == ".bin" else io.read_ensemble_csv(path)


def cmd_eval(args) -> int:
    ref, est = _read_any(args.reference), _read_any(args.estimate)
    doc = {"nmse_db": nmse_db(ref, est)}
    if args.samples is not None:
        doc["density"] = sampling_density(SampleSet.from_json(args.samples.read_text()))
    _emit(doc)
    return 0


COMMANDS = {
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "real": cmd_real,
    "synth": cmd_synth,
    "acquire": cmd_acquire,
    "reconstruct": cmd_reconstruct,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except MultibandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc.strerror or exc}: {exc.filename}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
