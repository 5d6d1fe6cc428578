#!/usr/bin/env python3
"""Regenerates data/ from the dendro binary: python3 tools/make_fixtures.py build/dendro"""
import json
import subprocess
import sys
from pathlib import Path

exe = sys.argv[1] if len(sys.argv) > 1 else "build/dendro"
data = Path(__file__).resolve().parent.parent / "data"
data.mkdir(exist_ok=True)


def run(*args):
    return subprocess.run([exe, *args], check=True, capture_output=True, text=True).stdout


(data / "example_tree.txt").write_text("(((*@a*@c)@b)@d*@e)@f\n")
for n in range(1, 6):
    (data / f"reduced_corolla_{n}.txt").write_text("(" + "()" * n + ")\n")
(data / "points.json").write_text(json.dumps([[0.0, 0.0], [1.0, 0.0], [0.25, 0.5], [-0.5, 2.0]]) + "\n")
for name, spec in [("com", "com:3"), ("ass", "ass:3"), ("end", "end:2:3")]:
    (data / f"{name}.operad.json").write_text(run("operad", "show", spec))

# Nerve of Com on the faces of ((**)*), with a second element at (*(**))
# on which every structure map acts like the first.
x = json.loads(run("nerve", "com:3", "--tree", "((**)*)"))
bad = "(*(**))"
x["values"][bad].append("copy")
for a in x["actions"]:
    if a["target"] == bad:
        a["map"].append(a["map"][0])
(data / "corrupted_com.json").write_text(json.dumps(x, indent=2) + "\n")
