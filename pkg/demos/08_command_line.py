"""The same workflow through the shadowgm command line.

Each subcommand reads an INI file; --set overrides single keys.  Exit codes:
0 success, 2 bound violation, 3 blow-up inside the global regime, 4 bad
configuration.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

QUICK = str(Path(__file__).resolve().parents[1] / "configs" / "quick.ini")
out = tempfile.mkdtemp()


def run(*args):
    cmd = [sys.executable, "-m", "shadowgm", *args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    print("$ shadowgm", " ".join(args[:2]), "...  -> exit", proc.returncode)
    lines = (proc.stdout + proc.stderr).strip().splitlines()
    print("   " + "\n   ".join(lines[:6]))


run("validate", QUICK)
run("simulate", QUICK, "--index", "5", "--output-dir", out)
run("ensemble", QUICK, "--paths", "32", "--output-dir", out)
run("verify-bounds", QUICK, "--paths", "32", "--output-dir", out)
run("verify-bounds", QUICK, "--paths", "32", "--output-dir", out,
    "--set", "integrator.scheme=em", "--set", "run.initial_profile=zero")
run("picard-check", QUICK, "--instances", "2")
run("convergence", QUICK, "--output-dir", out, "--set", "run.initial_profile=zero")
run("ensemble", QUICK, "--set", "model.zeta=1")
print("\noutputs in", out, sorted(p.name for p in Path(out).iterdir()))
