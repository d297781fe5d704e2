"""Driving the command line: reports, exit codes and reproducibility.

Runs the same commands a shell user would, through ``slantlab.cli.main``.
A TOML scenario file is written next to the outputs; running it twice gives
byte-identical files.
"""

import json
import tempfile
from pathlib import Path

from slantlab.cli import main

out = Path(tempfile.mkdtemp(prefix="slantlab-demo-"))

code = main(["verify", "example81", "--k", "1", "--flat", "--grid", "4x4", "-o", str(out / "flat.json")])
rep = json.loads((out / "flat.json").read_text())
print(f"verify example81 --flat: exit {code}, passed={rep['passed']}")
print("  ", {k: v["status"] for k, v in rep["checks"].items()})

print("\nwrong Lee convention on a conformal ambient (failures go to stderr):")
code = main(["verify", "example82", "--conformal", "linear-x1", "--lee-sign", "+1", "--lee-scale", "1", "--grid", "2x2", "-o", str(out / "bad.json")])
print(f"exit {code}")

main(["calibrate", "example82", "--conformal", "product-x1y1", "-o", str(out / "cal.json")])
print("\ncalibration record:", json.loads((out / "cal.json").read_text()))

(out / "run.toml").write_text(
    'schema_version = 1\nid = "demo"\n[immersion]\nfamily = "example82"\n'
    '[conformal]\nfamily = "product"\n[sampling]\nkind = "random"\ncount = 8\nseed = 3\n'
)
for i in (1, 2):
    main(["inequality", str(out / "run.toml"), "-o", str(out / f"margins{i}.csv")])
a, b = ((out / f"margins{i}.csv").read_bytes() for i in (1, 2))
print(f"\nmargin tables identical across runs: {a == b}")
print((out / "margins1.csv").read_text().splitlines()[0])
print(f"outputs in {out}")
