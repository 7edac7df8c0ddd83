"""Run the acceptance suite and print only the per-criterion verdict lines."""
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", str(ROOT / "tests" / "test_acceptance.py")],
                          cwd=ROOT, capture_output=True, text=True)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith("CRITERION")]
    print("\n".join(lines) if lines else proc.stdout)
    sys.exit(proc.returncode)
