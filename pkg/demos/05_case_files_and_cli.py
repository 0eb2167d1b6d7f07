"""
Case files and the command line
===============================

A case is a directory of CSV files plus a YAML config.  The same operations
are available from the ``hiergraph`` command.
"""

import subprocess
import sys
from pathlib import Path

from hiergraph.cases import two_bus_case
from hiergraph.ingest import write_case

out = Path(__file__).parent / "out"
network, demand = two_bus_case(days=1)
config = write_case(out / "two_bus", network, demand, scenario="low")
print(config.read_text())


def cli(*args):
    cmd = [sys.executable, "-m", "hiergraph.cli", "--config", str(config), *args]
    print("$ hiergraph", " ".join(args))
    print(subprocess.run(cmd, capture_output=True, text=True, check=True).stdout)


cli("build")
cli("solve", "--mode", "receding", "--out", str(out / "two_bus_run"))
cli("export-graph", "--view", "aggregate_subproblems", "--format", "graphml")
print((out / "two_bus_run" / "report.csv").read_text().splitlines()[:3])
