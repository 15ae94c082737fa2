"""Smoke test for the cqed_py extension module.

Build it with `pip install --no-build-isolation ./crates/python` (needs maturin),
or `cargo build --release -p cqed-python --features extension-module` and copy
`target/release/libcqed_py.so` to `cqed_py.so` somewhere on PYTHONPATH.
"""

import math
import sys
import tempfile
from pathlib import Path

import cqed_py


def check(cond, message):
    if not cond:
        sys.exit(f"smoke test failed: {message}")


def main():
    print("cqed_py", cqed_py.__version__)

    cfg = cqed_py.RunConfig("", ["photon_cutoff = 1", "max_bond = 0"])
    check(len(cfg.violations()) == 2, "expected two violations")
    try:
        cqed_py.RunConfig("unknown_key = 1")
        check(False, "unknown key accepted")
    except ValueError:
        pass

    freqs = cqed_py.pec_frequencies(5)
    check(all(abs(w - k) / k < 1e-3 for k, w in enumerate(freqs, 1)), f"PEC frequencies {freqs}")
    slab = cqed_py.pec_frequencies(3, slab=(-0.25, 0.125, 4.0))
    check(slab[0] < freqs[0], "slab does not red-shift the fundamental")

    chain = cqed_py.chain_map([1.0, 2.0, 3.0], [0.3, 0.2, 0.1])
    check(chain.orthogonality_defect < 1e-12, "chain transform not orthogonal")
    check(abs(chain.rho - math.sqrt(0.09 + 0.04 + 0.01)) < 1e-12, "lumped coupling")

    c = cqed_py.rabi_gaps("rabi_C_proper", 0.5, modes=2, cutoff=5, levels=4)
    d = cqed_py.rabi_gaps("rabi_D_proper", 0.5, modes=2, cutoff=5, levels=4)
    check(max(abs(a - b) for a, b in zip(c, d)) < 1e-2, f"gauge mismatch {c} vs {d}")

    with tempfile.TemporaryDirectory() as out:
        cfg = cqed_py.RunConfig(
            "",
            [
                'scenario = "pec_homogeneous"',
                "mode_count = 4",
                "periods = 0.02",
                "sample_every = 5",
                "field_positions = 11",
            ],
        )
        cfg.output_dir = out
        rows = cqed_py.run_scenario(cfg)
        check(rows["population.csv"] == 21, f"population rows {rows}")
        check((Path(out) / "manifest.csv").exists(), "manifest missing")

        run = cqed_py.run_dynamics(cfg)
        check(run.population[0] == 1.0, "initial population")
        check(run.mode_index == [1, 3, 5, 7], f"mode indices {run.mode_index}")
        check(len(run.field) == len(run.sample_times), "field samples")

    print("smoke test passed")


if __name__ == "__main__":
    main()
