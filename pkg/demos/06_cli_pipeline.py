"""End-to-end pipeline through the CLI: generate -> validate -> select ->
score -> metrics -> retrieve.  Every stage is a subprocess, the way a shell
user would chain them."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

workdir = Path(tempfile.mkdtemp(prefix="annokit-cli-demo-"))


def run(*argv):
    cmd = [sys.executable, "-m", "annokit.cli", *[str(a) for a in argv]]
    print(f"$ annokit {' '.join(str(a) for a in argv)}")
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.stdout.strip():
        print(f"  {proc.stdout.strip()}")
    if proc.returncode != 0:
        print(f"  stderr: {proc.stderr.strip()}")
        sys.exit(proc.returncode)
    return proc


pool = workdir / "pool.jsonl"
run("gen-synthetic", "--clusters", 5, "--per-cluster", 60, "--dim", 8,
    "--seed", 13, "--out", pool)
run("ingest-validate", "--pool", pool)

result = workdir / "selection.json"
run("select", "--pool", pool, "--method", "vote_k", "--budget", 15,
    "-k", 30, "--rho", 10, "--out", result)

scores = workdir / "scores.json"
run("score", "--pool", pool, "--demos-result", result, "--out", scores)

report = workdir / "report.json"
run("metrics", "--pool", pool, "--result", result,
    "--metrics", "div_f,repr,cluster_coverage", "--out", report)
print(f"  report: {json.loads(report.read_text())}")

queries = workdir / "queries.jsonl"
selected_ids = set(json.loads(result.read_text())["selected"])
with open(pool) as fh, open(queries, "w") as out:
    for line in list(fh)[:3]:
        record = json.loads(line)
        out.write(json.dumps({"id": "q-" + record["id"],
                              "embedding": record["embedding"],
                              "text": record.get("text", "")}) + "\n")

retrieved = workdir / "retrieved.jsonl"
annotated = workdir / "annotated.jsonl"
with open(pool) as fh, open(annotated, "w") as out:
    for line in fh:
        if json.loads(line)["id"] in selected_ids:
            out.write(line)
run("retrieve", "--annotated", annotated, "--queries", queries,
    "--budget", 300, "--out", retrieved)
first = json.loads(retrieved.read_text().splitlines()[0])
print(f"  first query got {len(first['demonstrations'])} demonstrations, "
      f"{first['token_estimate']} tokens")

print(f"\nartifacts in {workdir}")
