#!/usr/bin/env python3
"""End-to-end check of the omvcdr_py extension module.

Build the module first, then run this script from anywhere:

    cargo build -p omvcdr-py
    python3 python/smoke_test.py

The script copies the compiled cdylib into a temporary directory under the
import name Python expects, imports it, and exercises data generation,
fitting, metrics, and file round-trips.
"""

import shutil
import sys
import tempfile
from pathlib import Path

WORKSPACE = Path(__file__).resolve().parent.parent


def locate_cdylib() -> Path:
    candidates = [
        WORKSPACE / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libomvcdr_py.so", "libomvcdr_py.dylib", "omvcdr_py.dll")
    ]
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    sys.exit("extension module not found; run `cargo build -p omvcdr-py` first")


def main() -> None:
    cdylib = locate_cdylib()
    with tempfile.TemporaryDirectory() as scratch:
        suffix = ".pyd" if cdylib.suffix == ".dll" else ".so"
        shutil.copy2(cdylib, Path(scratch) / f"omvcdr_py{suffix}")
        sys.path.insert(0, scratch)
        import omvcdr_py as mv

        # Easy, well-separated blobs should be recovered perfectly.
        data = mv.generate_synthetic(
            n=150, k=4, view_dims=[12, 9], separation=50.0, noise_sigma=0.1, seed=3
        )
        assert data.sample_count == 150
        assert data.view_count == 2
        assert data.view_dims == [12, 9]
        truth = data.labels
        assert truth is not None and len(truth) == 150
        view = data.view(0)
        assert len(view) == 12 and len(view[0]) == 150

        outcome = mv.fit(data, k=4, lambda_=1.0, seed=0)
        assert outcome.converged
        assert len(outcome.labels) == 150
        assert outcome.latent_dims == [4, 8, 9]  # defaults capped at min view dim
        assert abs(sum(outcome.weights) - 1.0) < 1e-12
        trace = outcome.objective_trace
        assert all(b <= a + 1e-8 * (1 + abs(a)) for a, b in zip(trace, trace[1:]))
        assert mv.accuracy(truth, outcome.labels) == 1.0
        assert mv.nmi(truth, outcome.labels) == 1.0
        assert mv.purity(truth, outcome.labels) == 1.0
        assert mv.fscore(truth, outcome.labels) == 1.0

        # Identical flags must reproduce identical output.
        again = mv.fit(data, k=4, lambda_=1.0, seed=0)
        assert again.labels == outcome.labels
        assert again.objective_trace == outcome.objective_trace

        # Ablation variants run through the same entry point.
        for variant in ("omvc", "omvcdr2", "equal_alpha"):
            assert mv.accuracy(truth, mv.fit(data, k=4, variant=variant).labels) == 1.0

        # Metric edge cases.
        assert mv.nmi([0, 0, 1, 1], [0, 1, 0, 1]) == 0.0
        assert mv.accuracy([0, 1, 2], [2, 0, 1]) == 1.0  # relabeling is free

        # Disk round trip through the manifest format.
        manifest = data.save(str(Path(scratch) / "dataset"))
        reloaded = mv.load_dataset(manifest)
        assert reloaded.labels == truth
        assert reloaded.view_dims == data.view_dims
        assert reloaded.view(1) == data.view(1)

        # Normalization is idempotent up to roundoff.
        once = data.normalized()
        twice = once.normalized()
        assert all(
            abs(a - b) < 1e-12
            for row_a, row_b in zip(once.view(0), twice.view(0))
            for a, b in zip(row_a, row_b)
        )

        # Bad arguments raise instead of crashing.
        for bad_call in (
            lambda: mv.fit(data, k=0),
            lambda: mv.fit(data, k=4, variant="unknown"),
            lambda: mv.accuracy([0, 1], [0]),
            lambda: mv.load_dataset(str(Path(scratch) / "missing.toml")),
        ):
            try:
                bad_call()
            except (ValueError, OSError):
                pass
            else:
                raise AssertionError("expected an exception")

    print("smoke test passed")


if __name__ == "__main__":
    main()
