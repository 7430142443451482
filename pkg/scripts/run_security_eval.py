#!/usr/bin/env python3
"""Security evaluation: distinguisher game plus chosen-plaintext attacks.

Runs the indistinguishability game with both honest distinguishers, then
the regression attack in three error configurations: fresh per-message
errors (the real system), one reused triple (sabotage control, must
break), and fresh errors with the error seed disclosed to the adversary
(must also break, demonstrating why the seed stays between the endpoints).
"""

import argparse

from securejscc.codec import CodecSpec
from securejscc.datasets import DatasetSpec
from securejscc.lwe import LweParams, keygen
from securejscc.quantizer import QuantizerConfig
from securejscc.security import (AttackConfig, GameConfig, MarginalChiSquare,
                                 TrainedClassifier, run_cpa_attack,
                                 run_ind_cpa_game)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--pairs", type=int, default=4000)
    args = parser.parse_args()

    game_cfg = GameConfig(trials=args.trials, seed=2026,
                          params=LweParams(p=257, n1=32, n2=32,
                                           sigma_s=8.87, k=16))
    print("== indistinguishability game ==")
    for dist in (MarginalChiSquare(), TrainedClassifier()):
        print(" ", run_ind_cpa_game(game_cfg, dist).summary())

    lwe = LweParams(p=4093, n1=192, n2=192, sigma_s=8.87, k=64)
    pk = keygen(lwe, 21, 22).public()
    spec = CodecSpec(kind="identity", input_shape=(8, 8, 1), k=64,
                     latent_scale=lwe.p / 256.0)
    dataset = DatasetSpec("blob", 0, 8, 8, 1)
    qcfg = QuantizerConfig(lwe.p, 16)
    print("\n== chosen-plaintext attacks ==")
    for mode in ("fresh", "reused", "known_seed"):
        cfg = AttackConfig(adversary="linear", pairs=args.pairs,
                           dataset=dataset, error_mode=mode, seed=0)
        report = run_cpa_attack(cfg, spec, {}, pk, qcfg)
        print(report.summary())
        print()


if __name__ == "__main__":
    main()
