#!/usr/bin/env python3
# Copyright 2026 The IMCE Emulator Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Runs the toolchain end to end and validates every JSON artifact against
the schemas in docs/schemas."""

import argparse
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def run(*cmd, ok=True):
    p = subprocess.run([str(c) for c in cmd], capture_output=True, text=True)
    if ok and p.returncode != 0:
        sys.exit(f"command failed ({p.returncode}): {' '.join(map(str, cmd))}\n{p.stderr}")
    return p.returncode


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--imce", required=True)
    ap.add_argument("--modelgen", required=True)
    ap.add_argument("--worker", required=True)
    ap.add_argument("--schemas", required=True)
    a = ap.parse_args()

    schemas = {p.name.removesuffix(".schema.json"): json.loads(p.read_text())
               for p in pathlib.Path(a.schemas).glob("*.schema.json")}

    with tempfile.TemporaryDirectory() as tmp:
        t = pathlib.Path(tmp)
        run(a.modelgen, "model", "resnet8", "-o", t / "m.json")
        run(a.modelgen, "model", "digits", "-o", t / "digits.json")
        run(a.modelgen, "hw", "--an", 4, "--di", 2, "--fthreads", 4, "--sthreads", 8,
            "-o", t / "hw.json")
        run(a.imce, "compile", t / "m.json", "-o", t / "c")
        run(a.imce, "compile", t / "digits.json", "-o", t / "dc")
        run(a.imce, "map", t / "c", "--hw", t / "hw.json", "-s", "mincut", "-o", t / "d")
        run(a.imce, "map", t / "dc", "--hw", t / "hw.json", "-o", t / "dd")
        run(a.imce, "--seed", 2, "run", t / "d", "--synthetic", "uniform:4", "-w", 2,
            "--noise", "sigma_prog=0.02,sigma_read=0.01", "--worker", a.worker, "-o", t / "r")
        run(a.imce, "run", t / "dd", "--synthetic", "digits:8", "--worker", a.worker,
            "-o", t / "rd")
        run(a.imce, "run", t / "d", "--synthetic", "uniform:2", "--worker", t / "absent",
            "-o", t / "rf", ok=False)
        run(a.imce, "oracle", t / "c", "--synthetic", "uniform:2", "-o", t / "o.json")

        targets = [
            ("model", t / "m.json"), ("model", t / "digits.json"), ("hw_info", t / "hw.json"),
            ("compiled", t / "c/compiled.json"), ("fpga_info", t / "c/fpga_info.json"),
            ("adjacency", t / "c/adjacency.json"),
            ("compile_report", t / "c/compile_report.json"),
            ("dfl", t / "d/topology.dfl"), ("dfl", t / "dd/topology.dfl"),
            ("run_report", t / "r/report.json"), ("run_report", t / "rd/report.json"),
            ("run_report", t / "rf/report.json"),
            ("stats", t / "r/stats.json"), ("timing", t / "r/timing.json"),
            ("tensor_set", t / "r/outputs.json"), ("tensor_set", t / "o.json"),
        ]
        targets += [("board_config", p) for p in sorted((t / "d").glob("board_*.cfg"))]

        failures = 0
        for name, path in targets:
            v = jsonschema.Draft202012Validator(schemas[name])
            errors = list(v.iter_errors(json.loads(path.read_text())))
            status = "ok" if not errors else f"{len(errors)} error(s)"
            print(f"{name:15} {path.relative_to(t)}: {status}")
            for e in errors[:5]:
                print(f"    {list(e.absolute_path)}: {e.message}")
            failures += bool(errors)
        if "error" not in json.loads((t / "rf/report.json").read_text()):
            print("failed run report lacks 'error'")
            failures += 1
        return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
