"""Precompute every cached artifact the acceptance tests rely on.

Safe to interrupt and re-run: every step is cached (run directories via
run_experiment(reuse=True), tables and upper bounds via their own cache
files), so completed work is never redone. Progress is printed per step.

Usage: python3 scripts/warm_acceptance_cache.py [step ...]
Steps: headline, inventory, sweep, synthetic, ideal (default: all).
"""

import logging
import sys
import time

from setlang.desk import (
    desk_config,
    full_inventory_config,
    ideal_listener_result,
    sweep_base_config,
    synthetic_acre_rows,
    teacher_acre_rows,
)
from setlang.harness import run_experiment, sweep_set_size

logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")


def step(name, fn):
    t0 = time.time()
    out = fn()
    print(f"[{name}] done in {time.time() - t0:.1f}s", flush=True)
    return out


def headline():
    for game_type in ("ref", "setref", "concept"):
        for seed in range(5):
            a = step(
                f"headline {game_type} seed {seed}",
                lambda: run_experiment(desk_config(game_type, seed)),
            )
            r = a.report
            print(
                f"    acc {r.acc_seen:.3f}/{r.acc_unseen:.3f} "
                f"H(M|C) {r.cond_entropy_bits:.2f} AMI {r.ami:.3f} "
                f"rho {r.topo_rho_edit:.3f}",
                flush=True,
            )


def inventory():
    for seed in range(3):
        step(
            f"full-inventory run seed {seed}",
            lambda: run_experiment(full_inventory_config(seed)),
        )
        rows = step(f"teacher acre seed {seed}", lambda: teacher_acre_rows(seed))
        for r in rows:
            print(f"    {r.language:8s} {r.split:5s} b1 {r.bleu1:6.2f} "
                  f"acc {r.student_acc:6.2f}", flush=True)


def sweep():
    rows, rho = step(
        "sweep", lambda: sweep_set_size(sweep_base_config(), [1, 3, 5, 10], 3)
    )
    for size, rep, r in rows:
        print(f"    n={size} rep={rep} rho={r:.3f}", flush=True)
    print(f"    spearman {rho:.3f}", flush=True)


def synthetic():
    rows = step("synthetic acre", lambda: synthetic_acre_rows(0))
    for r in rows:
        print(f"    {r.language:8s} {r.split:5s} b1 {r.bleu1:6.2f}", flush=True)


def ideal():
    seen, unseen = step("ideal listener", lambda: ideal_listener_result(0))
    print(f"    seen {seen:.4f} unseen {unseen:.4f}", flush=True)


STEPS = {
    "headline": headline,
    "inventory": inventory,
    "sweep": sweep,
    "synthetic": synthetic,
    "ideal": ideal,
}

if __name__ == "__main__":
    names = sys.argv[1:] or list(STEPS)
    for name in names:
        STEPS[name]()
    print("all requested steps complete", flush=True)
