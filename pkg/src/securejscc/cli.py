"""Command line front end.

Subcommands: keygen, transmit, sweep, indcpa, attack, train. All of them
read JSON config files; see README for the schema.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import codec, security, training
from .config import (attack_config_from_dict, config_from_dict,
                     game_config_from_dict, load_config)
from .datasets import read_image, synthesize_dataset
from .lwe import LweParams, keygen, load_public_key, load_secret_key, save_key_files
from .modem import build_constellation
from .pipeline import records_to_csv, sweep, transmit
from .quantizer import QuantizerConfig


def _cmd_keygen(args) -> int:
    raw = json.loads(Path(args.params).read_text())
    seeds = {"key_seed": raw.pop("key_seed", None),
             "lattice_seed": raw.pop("lattice_seed", None)}
    if args.key_seed is not None:
        seeds["key_seed"] = args.key_seed
    if args.lattice_seed is not None:
        seeds["lattice_seed"] = args.lattice_seed
    if seeds["key_seed"] is None or seeds["lattice_seed"] is None:
        print("keygen: key_seed and lattice_seed must come from the params "
              "file or the command line", file=sys.stderr)
        return 2
    params = LweParams(**raw)
    key = keygen(params, int(seeds["key_seed"]), int(seeds["lattice_seed"]))
    public_path, secret_path = args.out
    save_key_files(key, public_path, secret_path)
    print(f"wrote public key to {public_path} and secret key to {secret_path}")
    return 0


def _load_images(cfg, source: str):
    if source == "synthetic":
        return synthesize_dataset(cfg.dataset, cfg.seeds.data)
    return [read_image(source)]


def _cmd_transmit(args) -> int:
    cfg = load_config(args.config)
    keys = load_secret_key(args.keys)
    if keys.params != cfg.lwe:
        print("transmit: key file parameters do not match the config",
              file=sys.stderr)
        return 2
    images = _load_images(cfg, args.infile)
    qcfg = QuantizerConfig(cfg.lwe.p, cfg.n_levels, sigma_q=cfg.sigma_q)
    cons = build_constellation(cfg.lwe.p, cfg.avg_power)
    params = _codec_params(cfg, args.codec_params)
    records = []
    for idx, x in enumerate(images):
        snr = cfg.snr_grid_db[0]
        _, record = transmit(x, cfg.codec, params, keys, qcfg, cons, snr,
                             cfg.sigma_l, cfg.seeds.error, cfg.seeds.channel,
                             message_index=idx, image_index=idx)
        records.append(record)
    Path(args.out).write_text(records_to_csv(records))
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _codec_params(cfg, codec_params_path):
    if codec_params_path:
        spec, params = codec.load_codec(codec_params_path)
        if spec != cfg.codec:
            raise ValueError("codec parameter file does not match the config spec")
        return params
    if cfg.codec.kind != "identity":
        raise ValueError(f"{cfg.codec.kind} codec needs --codec-params")
    return {}


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    keys = keygen(cfg.lwe, cfg.seeds.key, cfg.seeds.lattice)
    images = synthesize_dataset(cfg.dataset, cfg.seeds.data)
    qcfg = QuantizerConfig(cfg.lwe.p, cfg.n_levels, sigma_q=cfg.sigma_q)
    cons = build_constellation(cfg.lwe.p, cfg.avg_power)
    params = _codec_params(cfg, args.codec_params)
    records = sweep(images, cfg.codec, params, keys, qcfg, cons,
                    list(cfg.snr_grid_db), cfg.sigma_l, cfg.seeds.error,
                    cfg.seeds.channel)
    out = Path(args.out or cfg.output_csv)
    out.write_text(records_to_csv(records))
    print(f"wrote {len(records)} records ({len(cfg.snr_grid_db)} SNR points) to {out}")
    return 0


def _cmd_indcpa(args) -> int:
    raw = json.loads(Path(args.config).read_text())
    game_raw = raw.get("game", raw)
    cfg = game_config_from_dict(game_raw)
    result = security.run_ind_cpa_game(cfg)
    print(result.summary())
    if args.out:
        Path(args.out).write_text(
            security.GAME_CSV_HEADER + "\n" + result.csv_row() + "\n")
        print(f"wrote game report to {args.out}")
    return 0


def _cmd_attack(args) -> int:
    raw = json.loads(Path(args.config).read_text())
    cfg = config_from_dict(raw)
    attack_cfg = attack_config_from_dict(raw.get("attack", {}),
                                         default_dataset=cfg.dataset)
    keys = keygen(cfg.lwe, cfg.seeds.key, cfg.seeds.lattice)
    qcfg = QuantizerConfig(cfg.lwe.p, cfg.n_levels, sigma_q=cfg.sigma_q)
    params = _codec_params(cfg, args.codec_params)

    reports = [security.run_cpa_attack(attack_cfg, cfg.codec, params,
                                       keys.public(), qcfg,
                                       sigma_l=cfg.sigma_l,
                                       avg_power=cfg.avg_power)]
    sabotage_ok = True
    if args.sabotage_control:
        sabotage_cfg = replace(attack_cfg, error_mode="reused", adversary="linear")
        sabotage = security.run_cpa_attack(sabotage_cfg, cfg.codec, params,
                                           keys.public(), qcfg,
                                           sigma_l=cfg.sigma_l,
                                           avg_power=cfg.avg_power)
        reports.append(sabotage)
        sabotage_ok = sabotage.mse_ratio < 0.5

    for report in reports:
        print(report.summary())
        print()
    if args.out:
        rows = [security.ATTACK_CSV_HEADER] + [r.csv_row() for r in reports]
        Path(args.out).write_text("\n".join(rows) + "\n")
        print(f"wrote attack report to {args.out}")
    if not sabotage_ok:
        print("SABOTAGE CONTROL FAILED: reused-error attack did not beat the "
              "baseline, the harness cannot be trusted", file=sys.stderr)
        return 1
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    tr = cfg.training
    keys = keygen(cfg.lwe, cfg.seeds.key, cfg.seeds.lattice)
    images = synthesize_dataset(cfg.dataset, cfg.seeds.data)
    n_val = max(1, int(round(len(images) * tr.val_fraction)))
    train_images, val_images = images[:-n_val], images[-n_val:]
    qcfg = QuantizerConfig(cfg.lwe.p, cfg.n_levels, sigma_q=cfg.sigma_q)
    cons = build_constellation(cfg.lwe.p, cfg.avg_power)
    ctx = training.TrainContext(
        spec=cfg.codec, keys=keys, qcfg=qcfg, cons=cons,
        snr_db=tr.snr_train_db, sigma_l=cfg.sigma_l,
        error_seed=cfg.seeds.error, channel_seed=cfg.seeds.channel,
        loss=tr.loss)
    state = training.init_train_state(cfg.codec, tr.init_seed, tr.learning_rate)
    result = training.train_codec(
        train_images, val_images, ctx, state, max_steps=tr.max_steps,
        batch_size=tr.batch_size, shuffle_seed=tr.shuffle_seed,
        patience=tr.patience, decay_patience=tr.decay_patience,
        lr_decay=tr.lr_decay)
    codec.save_codec(cfg.codec, result.state.params, args.out)
    print(f"trained {result.state.step} steps; "
          f"val loss {result.val_losses[0]:.4f} -> {result.val_losses[-1]:.4f}; "
          f"saved parameters to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="securejscc",
        description="encrypted joint source-channel transmission toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a key pair from a params file")
    p.add_argument("--params", required=True, help="JSON with p,n1,n2,sigma_s,k")
    p.add_argument("--key-seed", type=int, default=None)
    p.add_argument("--lattice-seed", type=int, default=None)
    p.add_argument("--out", nargs=2, required=True,
                   metavar=("PUBLIC", "SECRET"))
    p.set_defaults(func=_cmd_keygen)

    p = sub.add_parser("transmit", help="send images at the first grid SNR")
    p.add_argument("--config", required=True)
    p.add_argument("--keys", required=True, help="secret key file")
    p.add_argument("--in", dest="infile", required=True,
                   help="'synthetic' or a PGM/PPM image path")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--codec-params", default=None)
    p.set_defaults(func=_cmd_transmit)

    p = sub.add_parser("sweep", help="full dataset x SNR grid sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override config output_csv")
    p.add_argument("--codec-params", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("indcpa", help="run the indistinguishability game")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="optional CSV report path")
    p.set_defaults(func=_cmd_indcpa)

    p = sub.add_parser("attack", help="run the chosen-plaintext attack")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="optional CSV report path")
    p.add_argument("--codec-params", default=None)
    p.add_argument("--sabotage-control", action="store_true",
                   help="also run the reused-error control; exit 1 if it fails")
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("train", help="train the configured codec")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="codec parameter file to write")
    p.set_defaults(func=_cmd_train)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
