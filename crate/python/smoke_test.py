"""Builds the `tam` extension module and exercises it from Python.

Usage: python3 python/smoke_test.py [--no-build]
"""

import csv
import io
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build(tmp: pathlib.Path) -> None:
    cmd = ["cargo", "build", "--release", "-p", "tam-py", "--features", "extension-module"]
    subprocess.run(cmd, cwd=ROOT, check=True)
    lib = ROOT / "target" / "release" / "libtam.so"
    if not lib.exists():
        lib = lib.with_suffix(".dylib")
    shutil.copy(lib, tmp / "tam.so")


def main() -> int:
    tmp = pathlib.Path(tempfile.mkdtemp())
    if "--no-build" not in sys.argv:
        build(tmp)
    else:
        shutil.copy(ROOT / "target" / "release" / "libtam.so", tmp / "tam.so")
    sys.path.insert(0, str(tmp))
    import tam

    truth = tam.hard_instance(400, 1)
    assert truth.startswith("n=400\n")
    assert tam.max_matching_size(truth) <= 400

    advice = tam.corrupt_advice(truth, 0.0, "add", 1)
    assert advice == truth
    assert tam.l1_distance(truth, advice) == 0
    noisy = tam.corrupt_advice(truth, 1.0, "replace", 1)
    assert tam.l1_distance(truth, noisy) > 0

    out = tam.run(truth, advice, "TaM-all", 1)
    assert out["m"] <= out["n_star"]
    assert abs(out["ratio"] - out["m"] / out["n_star"]) < 1e-12
    base = tam.run(truth, advice, variant="Ranking", seed=1)
    assert "verdict" not in base

    try:
        tam.run(truth, advice, "Oracle")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown variant accepted")

    right, wrong = tam.demo_hardness(1000)
    assert right == 1.0 and wrong <= 0.502, (right, wrong)

    text = tam.sweep('n = 200\nseeds = [0]\nalphas = [0.0, 1.0]\nkinds = ["replace"]\nrecord_wall_time = false\n')
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 2 * 6, len(rows)
    assert {r["variant"] for r in rows} == {"Ranking", "Greedy", "TaM-all", "TaM-no-remap", "TaM-no-bucket", "TaM-no-patch"}

    print(f"ok: TaM-all {out['ratio']:.4f} ({out['verdict']}), Ranking {base['ratio']:.4f}, hardness {right} / {wrong}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
