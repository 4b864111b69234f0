"""Command-line entry point wiring the library together.

Subcommands: rope-table, spectrum, dataset, train, sample, evaluate,
ablate.  Every command resolves its configuration (config file overridden
by flags), runs, and writes a manifest with content hashes next to its
outputs.  Exit code is nonzero on any error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import dataggen, evalkit, pgmio
from .dynamic import PePolicy, ScaleSchedule, WAVELENGTH_COLUMNS, wavelength_report
from .extrapolation import RampParams
from .flow import forward_noise
from .manifest import write_manifest
from .rope2d import build_frequency_table
from .spectral import fit_power_law, progression_map, radial_psd
from .tinydit import Model, ModelConfig, TrainHyper, load_checkpoint, save_checkpoint, train

POLICY_NAMES = {
    "vanilla": "vanilla",
    "pi": "pi",
    "ntk": "ntk",
    "yarn": "yarn",
    "dy-pi": "dy_pi",
    "dy-ntk": "dy_ntk",
    "dy-yarn": "dy_yarn",
    "lumina": "lumina_time_aware",
}


def _csv_floats(text):
    return [float(v) for v in str(text).split(",") if v != ""]


def _csv_ints(text):
    return [int(v) for v in str(text).split(",") if v != ""]


def _csv_strs(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def load_config(path):
    """Parse a `key = value` config file; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(parser, argv):
    """Let a --config file override parser defaults (flags still win)."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = load_config(known.config)
    dests = {a.dest: a for a in parser._actions}
    for key, value in cfg.items():
        if key == "config":
            continue
        if key not in dests:
            raise ValueError(f"unknown config key {key!r}")
        action = dests[key]
        action.default = action.type(value) if action.type else value


def add_policy_flags(p):
    p.add_argument("--policy", choices=sorted(POLICY_NAMES), default="vanilla")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=32.0)
    p.add_argument("--lambda-s", type=float, default=2.0)
    p.add_argument("--lambda-t", type=float, default=2.0)
    p.add_argument("--placement", choices=("exponent", "multiplicative"), default="exponent")
    p.add_argument("--target", choices=("by_parts_thresholds", "ntk_term", "both"),
                   default="by_parts_thresholds")
    p.add_argument("--attention-scale", choices=("auto", "on", "off"), default="auto")


def build_policy(args, name=None):
    kind = POLICY_NAMES[name or args.policy]
    enabled = {"auto": None, "on": True, "off": False}[args.attention_scale]
    return PePolicy(
        kind=kind,
        ramp=RampParams(alpha=args.alpha, beta=args.beta),
        schedule=ScaleSchedule(
            lambda_s=args.lambda_s,
            lambda_t=args.lambda_t,
            placement=args.placement,
            target=args.target,
        ),
        attention_scale_enabled=enabled,
    )


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _config_dict(args, skip=("func", "config")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# -- rope-table -------------------------------------------------------------


def cmd_rope_table(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = build_frequency_table(args.dim, args.theta_base)
    rows = []
    for name in _csv_strs(args.policies):
        if name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {name!r}; valid: {', '.join(sorted(POLICY_NAMES))}")
        policy = build_policy(args, name)
        rows.extend(
            wavelength_report(policy, table, args.train_side, args.test_side, _csv_floats(args.times))
        )
    csv_path = out_dir / "rope_table.csv"
    _write_csv(csv_path, WAVELENGTH_COLUMNS, rows)
    write_manifest(
        out_dir / "rope_table.manifest.json",
        "rope-table",
        _config_dict(args),
        seeds=[],
        outputs=[csv_path],
    )
    print(f"wrote {csv_path} ({len(rows)} rows)")


# -- spectrum ---------------------------------------------------------------


def cmd_spectrum(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    images, _, manifest = dataggen.load_dataset(args.dataset)
    side = manifest["side"]
    times = sorted(set(_csv_floats(args.times)) | {0.0, 1.0})
    bins = args.bins or side // 2
    noise = np.empty_like(images)
    for i in range(images.shape[0]):
        rng = np.random.default_rng(np.random.SeedSequence([int(args.seed), 3, i]))
        noise[i] = rng.standard_normal(images.shape[1:])
    spectra = {}
    rows = []
    for t in times:
        mixed = forward_noise(images, noise, t).x
        spec = radial_psd(mixed, bins=bins)
        spectra[t] = spec
        rows.extend((t, f, p) for f, p in zip(spec.freq, spec.power))
    spectra_path = out_dir / "spectra.csv"
    _write_csv(spectra_path, ("t", "freq", "power"), rows)

    band = tuple(_csv_floats(args.band))
    fit = fit_power_law(spectra[0.0], band)
    fit_path = out_dir / "powerlaw_fit.json"
    with open(fit_path, "w") as fh:
        json.dump(
            {"C": fit.C, "omega": fit.omega, "band": list(fit.fit_band), "residual": fit.residual},
            fh,
            indent=1,
            sort_keys=True,
        )

    pmap = progression_map({t: s.band(1, bins - 1) for t, s in spectra.items()})
    prog_path = out_dir / "progression.csv"
    _write_csv(
        prog_path,
        ("t", *(f"f{int(f)}" for f in pmap.freq)),
        [(t, *row) for t, row in zip(pmap.times, pmap.gamma)],
    )
    heat_path = out_dir / "progression.pgm"
    pgmio.write_pgm(heat_path, np.rint(np.clip(pmap.gamma, 0, 1) * 255).astype(np.uint8))

    write_manifest(
        out_dir / "spectrum.manifest.json",
        "spectrum",
        _config_dict(args),
        seeds=[args.seed],
        inputs=[Path(args.dataset) / dataggen.DATASET_MANIFEST],
        outputs=[spectra_path, fit_path, prog_path, heat_path],
        extra={"times": times, "fit": {"C": fit.C, "omega": fit.omega}},
    )
    print(f"wrote {spectra_path}; fitted omega={fit.omega:.3f} C={fit.C:.4g}")


# -- dataset ----------------------------------------------------------------


def mixture_specs(side, count, seed, periods, omegas):
    """The reference training mixture: texture classes then power-law classes."""
    n_tex = len(periods)
    specs = [
        dataggen.DatasetSpec(
            kind="periodic_texture",
            side=side,
            count=count // 2,
            seed=seed,
            params={"periods": list(periods)},
            class_ids=tuple(range(n_tex)),
        ),
        dataggen.DatasetSpec(
            kind="power_law_field",
            side=side,
            count=count - count // 2,
            seed=seed + 1,
            params={"omega": list(omegas)},
            class_ids=tuple(range(n_tex, n_tex + len(omegas))),
        ),
    ]
    return specs


def cmd_dataset(args):
    out_dir = Path(args.out)
    if args.kind == "mixture":
        specs = mixture_specs(
            args.side, args.count, args.seed, _csv_ints(args.periods), _csv_floats(args.omegas)
        )
    elif args.kind == "power_law":
        omegas = _csv_floats(args.omegas)
        specs = [
            dataggen.DatasetSpec(
                kind="power_law_field",
                side=args.side,
                count=args.count,
                seed=args.seed,
                params={"omega": omegas},
                class_ids=tuple(range(len(omegas))),
            )
        ]
    elif args.kind == "textures":
        periods = _csv_ints(args.periods)
        specs = [
            dataggen.DatasetSpec(
                kind="periodic_texture",
                side=args.side,
                count=args.count,
                seed=args.seed,
                params={"periods": periods},
                class_ids=tuple(range(len(periods))),
            )
        ]
    else:
        specs = [
            dataggen.DatasetSpec(
                kind="blob_scene",
                side=args.side,
                count=args.count,
                seed=args.seed,
                params={"blobs": args.blobs, "sigma": args.sigma},
                class_ids=(0,),
            )
        ]
    manifest = dataggen.save_dataset(specs, out_dir)
    files = [out_dir / e["file"] for e in manifest["images"]]
    write_manifest(
        out_dir / "dataset.manifest.json",
        "dataset",
        _config_dict(args),
        seeds=[args.seed],
        outputs=[out_dir / dataggen.DATASET_MANIFEST, *files],
    )
    print(f"wrote {len(files)} images to {out_dir}")


# -- train ------------------------------------------------------------------


def cmd_train(args):
    images, classes, manifest = dataggen.load_dataset(args.dataset)
    side = manifest["side"]
    cfg = ModelConfig(
        image_side=side,
        patch_size=args.patch_size,
        d_model=args.d_model,
        heads=args.heads,
        layers=args.layers,
        mlp_ratio=args.mlp_ratio,
        class_count=args.class_count,
        theta_base=args.theta_base,
        qk_bias_init=args.qk_bias_init,
    )
    hyper = TrainHyper(lr=args.lr, momentum=args.momentum, batch=args.batch, steps=args.steps)
    ckpt = train(cfg, images, classes, hyper, args.seed, log_every=args.log_every)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out, ckpt)
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        "train",
        _config_dict(args),
        seeds=[args.seed],
        inputs=[Path(args.dataset) / dataggen.DATASET_MANIFEST],
        outputs=[out],
        extra={"initial_loss": ckpt.meta["initial_loss"],
               "final_loss_tail_mean": ckpt.meta["final_loss_tail_mean"]},
    )
    print(
        f"wrote {out}: initial loss {ckpt.meta['initial_loss']:.4f}, "
        f"final tail mean {ckpt.meta['final_loss_tail_mean']:.4f}"
    )


# -- sample -----------------------------------------------------------------


def cmd_sample(args):
    ckpt = load_checkpoint(args.checkpoint)
    cfg = ckpt.config
    if args.test_side % cfg.patch_size != 0:
        raise ValueError(
            f"resolution {args.test_side} not divisible by patch size {cfg.patch_size}"
        )
    model = ckpt.to_model()
    policy = build_policy(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    step_log = []
    samples = evalkit.sample_with_policy(
        model,
        policy,
        args.test_side,
        args.seed,
        args.count,
        args.steps,
        args.class_id,
        on_step=lambda k, t: step_log.append((k, t)),
    )
    paths = []
    for i, img in enumerate(samples):
        p = out_dir / f"sample_{i:05d}.pgm"
        pgmio.write_pgm(p, pgmio.encode_unit(img))
        paths.append(p)
    write_manifest(
        out_dir / "sample.manifest.json",
        "sample",
        _config_dict(args),
        seeds=[args.seed],
        inputs=[Path(args.checkpoint)],
        outputs=paths,
        extra={
            "policy": policy.to_dict(),
            "train_side": cfg.image_side,
            "steps": [{"k": k, "t": t} for k, t in step_log],
        },
    )
    print(f"wrote {len(paths)} samples to {out_dir}")


def _read_sample_dir(path):
    root = Path(path)
    man_path = root / "sample.manifest.json"
    manifest = json.loads(man_path.read_text()) if man_path.exists() else None
    files = sorted(root.glob("*.pgm"))
    if not files:
        raise FileNotFoundError(f"no PGM samples in {root}")
    images = np.stack([pgmio.decode_unit(pgmio.read_pgm(f)) for f in files])
    return images, manifest


# -- evaluate ---------------------------------------------------------------


def cmd_evaluate(args):
    samples, sample_manifest = _read_sample_dir(args.samples)
    ref_images, _, _ = dataggen.load_dataset(args.reference)
    reference = radial_psd(ref_images)
    train_side = args.train_side
    if train_side == 0:
        if not sample_manifest:
            raise ValueError("no sample manifest; pass --train-side explicitly")
        train_side = int(sample_manifest["extra"]["train_side"])
    policy = (
        PePolicy.from_dict(sample_manifest["extra"]["policy"])
        if sample_manifest
        else PePolicy(kind="vanilla")
    )
    seed = sample_manifest["seeds"][0] if sample_manifest else 0
    band = tuple(_csv_floats(args.band))
    report = evalkit.evaluate_samples(samples, reference, band, train_side, seed, policy)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out,
        ("policy", "resolution", "seed", "sample_count", "spectral_distance", "artifact_score"),
        [
            (
                policy.kind,
                report.resolution,
                report.seed,
                report.sample_count,
                report.spectral_distance,
                report.artifact_score,
            )
        ],
    )
    write_manifest(
        out.with_suffix(".manifest.json"),
        "evaluate",
        _config_dict(args),
        seeds=[seed],
        inputs=[Path(args.reference) / dataggen.DATASET_MANIFEST],
        outputs=[out],
        extra={"report": report.__dict__ | {"policy": policy.to_dict()}},
    )
    print(
        f"{policy.kind} @ {report.resolution}: spectral_distance={report.spectral_distance:.4f} "
        f"artifact_score={report.artifact_score:.4f}"
    )


# -- ablate -------------------------------------------------------------------


def cmd_ablate(args):
    ckpt = load_checkpoint(args.checkpoint)
    model = ckpt.to_model()
    ref_images, _, _ = dataggen.load_dataset(args.reference)
    reference = radial_psd(ref_images)
    grid = evalkit.AblationGrid(
        test_side=args.test_side,
        steps=args.steps,
        batch=args.batch,
        class_id=args.class_id,
        band=tuple(_csv_floats(args.band)),
        ramp=RampParams(alpha=args.alpha, beta=args.beta),
    )
    seeds = _csv_ints(args.seeds)
    rows = evalkit.ablation_grid(model, grid, seeds, reference)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, evalkit.ABLATION_COLUMNS, rows)
    write_manifest(
        out.with_suffix(".manifest.json"),
        "ablate",
        _config_dict(args),
        seeds=seeds,
        inputs=[Path(args.checkpoint), Path(args.reference) / dataggen.DATASET_MANIFEST],
        outputs=[out],
    )
    print(f"wrote {out} ({len(rows)} rows)")


# -- parser -------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="ropeflow", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("rope-table", help="emit effective wavelengths per policy/time")
    p.add_argument("--config")
    p.add_argument("--out", default="rope_table_out")
    p.add_argument("--policies", default=",".join(sorted(POLICY_NAMES)))
    p.add_argument("--times", default="0.2,0.8")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--theta-base", type=float, default=1e-4)
    p.add_argument("--train-side", type=int, default=1024)
    p.add_argument("--test-side", type=int, default=2048)
    add_policy_flags(p)
    p.set_defaults(func=cmd_rope_table)

    p = sub.add_parser("spectrum", help="radial PSD per time, progression map, power-law fit")
    p.add_argument("--config")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default="spectrum_out")
    p.add_argument("--times", default="0,0.25,0.5,0.75,1")
    p.add_argument("--bins", type=int, default=0)
    p.add_argument("--band", default="2,16")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("dataset", help="generate a synthetic dataset directory")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("mixture", "power_law", "textures", "blobs"), default="mixture")
    p.add_argument("--side", type=int, default=32)
    p.add_argument("--count", type=int, default=2048)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--periods", default="4,8,16,32")
    p.add_argument("--omegas", default="1.6,2.0,2.4,2.8")
    p.add_argument("--blobs", type=int, default=8)
    p.add_argument("--sigma", type=float, default=2.0)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train the desk-scale model on a dataset directory")
    p.add_argument("--config")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default="ropeflow.ckpt")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patch-size", type=int, default=4)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--mlp-ratio", type=int, default=4)
    p.add_argument("--class-count", type=int, default=8)
    p.add_argument("--theta-base", type=float, default=1e-4)
    p.add_argument("--qk-bias-init", type=float, default=0.0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--log-every", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample images from a checkpoint under a policy")
    p.add_argument("--config")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default="samples_out")
    p.add_argument("--test-side", type=int, default=64)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=28)
    p.add_argument("--class-id", type=int, default=0)
    add_policy_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="score a sample directory against a reference dataset")
    p.add_argument("--config")
    p.add_argument("--samples", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out", default="evaluation.csv")
    p.add_argument("--band", default="1,12")
    p.add_argument("--train-side", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run the scheduler ablation grid")
    p.add_argument("--config")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out", default="ablation.csv")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--test-side", type=int, default=64)
    p.add_argument("--steps", type=int, default=28)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--class-id", type=int, default=0)
    p.add_argument("--band", default="1,12")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=32.0)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        # apply config-file defaults to the selected subcommand
        if argv and argv[0] in parser._subparsers._group_actions[0].choices:
            sub = parser._subparsers._group_actions[0].choices[argv[0]]
            _apply_config(sub, argv[1:])
        args = parser.parse_args(argv)
        args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
