"""Explain a model living in another process.

The oracle here is a tiny script started as a child process; it speaks the
line-delimited JSON wire protocol (one request/reply object per line over
stdin/stdout), so the explained model can be written in any language and
never links against this package. The same mechanism backs
`pgmx explain --oracle external --oracle-cmd '...'`.
"""

import sys
import tempfile
from pathlib import Path

from pgmx import ExplainConfig, ExternalOracle, Graph, explain

ORACLE_SCRIPT = '''
import json, sys

# each node is scored from the average feature over itself and its
# neighbors, so perturbing a neighbor moves the prediction too
for line in sys.stdin:
    request = json.loads(line)
    graph = request["graph"]
    n = graph["num_nodes"]
    hood = {v: [v] for v in range(n)}
    for u, v in graph["edges"]:
        hood[u].append(v)
        hood[v].append(u)
    scores = []
    for v in range(n):
        m = sum(graph["features"][u][0] for u in hood[v]) / len(hood[v])
        m = max(0.02, min(0.98, m))
        scores.append([m, 1.0 - m])
    sys.stdout.write(json.dumps({"id": request["id"], "mode": "node", "scores": scores}) + "\\n")
    sys.stdout.flush()
'''

script = Path(tempfile.mkstemp(suffix=".py")[1])
script.write_text(ORACLE_SCRIPT)

graph = Graph.from_edges(
    6,
    [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)],
    [[0.9], [0.8], [0.1], [0.2], [0.85], [0.15]],
)

with ExternalOracle([sys.executable, str(script)], mode="node", num_classes=2) as oracle:
    result = explain(oracle, graph, target=0, config=ExplainConfig(n=400, hops=2, seed=3))

print(f"explained node {result.target} through a child-process oracle")
print(f"selected variables: {list(result.ranked_variables())}")
print(f"learned edges: {result.network.structure.edges()}")
print(f"baseline P(target) = {result.baseline_query.round(3).tolist()}")
script.unlink()
