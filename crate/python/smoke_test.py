#!/usr/bin/env python3
"""Build the ramlab_py extension, import it, and exercise every binding.

Run from anywhere: ``python3 python/smoke_test.py``
"""

import json
import shutil
import subprocess
import sys
import sysconfig
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_extension() -> Path:
    subprocess.run(
        ["cargo", "build", "-p", "ramlab-py", "--release"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "release" / "libramlab_py.so"
    if not built.exists():  # e.g. macOS
        built = ROOT / "target" / "release" / "libramlab_py.dylib"
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    dest = Path(__file__).resolve().parent / f"ramlab_py{suffix}"
    shutil.copyfile(built, dest)
    return dest


def main() -> None:
    dest = build_extension()
    sys.path.insert(0, str(dest.parent))
    import ramlab_py

    failures = []

    def check(name, cond):
        print(f"{'PASS' if cond else 'FAIL'} {name}")
        if not cond:
            failures.append(name)

    # ring identities
    desc = json.loads(ramlab_py.ring(3))
    check("ring-p3", desc["p"] == 3 and len(desc["modulus"]) == 3)

    # Eisenstein shifts
    rep = json.loads(ramlab_py.eisenstein(2, 3))
    check("eisenstein-8", rep["eisenstein"] is True)

    # classification of a ramified element and a tame product
    vars2 = [("x", 1), ("y", 1)]
    ram = json.loads(ramlab_py.classify(3, vars2, "x*y^4 + 27"))
    check("classify-ramified", ram["class"] == "Ramified")
    tame = json.loads(
        ramlab_py.classify(3, vars2, "(x*y^4 + 27)*(x^4*y + 27)^2")
    )
    check("classify-tame", tame["class"] == "Tame")

    # approximation order with witness
    g = json.loads(
        ramlab_py.gamma(3, vars2, "(x*y^4 + 27)*(x^4*y + 27)^2", 6)
    )
    check(
        "gamma-witness",
        g["level"] == {"at_least": 6} and g["witness"]["num"] == "x^3*y^2",
    )

    # rank-3 cover in normal form
    alg = json.loads(
        ramlab_py.normalize(
            3, vars2, "(x*y^4 + 27)*(x^4*y + 27)^2", "x^3*y^2"
        )
    )
    check("normalize-rank3", len(alg["basis"]) == 3 and alg["verified"])

    # wildly ramified cover
    wc = json.loads(ramlab_py.wild_cover(3, 2, 2))
    check(
        "wild-cover",
        wc["q"] == 5 and wc["residual_ok"] and wc["verified"],
    )

    # scenarios
    koh = json.loads(ramlab_py.koh())
    check("koh-all-pass", all(c["pass"] for c in koh["checks"]))
    quad = json.loads(ramlab_py.quad(17))
    check("quad-17", all(c["pass"] for c in quad["checks"]))
    bat = json.loads(ramlab_py.battery(5, 10))
    check("battery", all(c["pass"] for c in bat["checks"]))

    if failures:
        sys.exit(f"smoke test failed: {failures}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
