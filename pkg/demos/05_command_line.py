"""The batch interface, driven end to end in a scratch directory."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path


def asrg(*args):
    proc = subprocess.run([sys.executable, "-m", "asrg", *args], capture_output=True, text=True)
    print(f"$ asrg {' '.join(args)}  -> exit {proc.returncode}")
    for line in (proc.stdout + proc.stderr).strip().splitlines()[:8]:
        print("   ", line)
    return proc.returncode


with tempfile.TemporaryDirectory() as tmp:
    d = Path(tmp)
    asrg("gen", "--seed", "4", "--n", "3", "--m", "2", "--family", "mixed-piecewise", "--out", str(d / "game.json"))
    asrg("solve", "--instance", str(d / "game.json"), "--out", str(d / "flow.json"), "--algorithm", "both",
         "--epsilon", "1e-6")
    asrg("verify", "--instance", str(d / "game.json"), "--flow", str(d / "flow.json"))
    asrg("best-response", "--instance", str(d / "game.json"), "--flow", str(d / "flow.json"), "--player", "2")
    asrg("typesets", "--n", "3", "--m", "2")
    # a hand-edited flow file that moves player 1's flow around fails verification
    data = json.loads((d / "flow.json").read_text())
    row = [float(x) for x in data["flow"][0]]
    row = [row[0] + 0.05, row[1] - 0.05]
    data["flow"][0] = [repr(x) for x in row]
    (d / "bad.json").write_text(json.dumps(data, indent=2))
    asrg("verify", "--instance", str(d / "game.json"), "--flow", str(d / "bad.json"))
