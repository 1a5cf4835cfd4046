import importlib.util
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from chain_env import ChainEnv

entry, path = sys.argv[1], sys.argv[2]
spec = importlib.util.spec_from_file_location("candidate", path)
module = importlib.util.module_from_spec(spec)
spec.loader.exec_module(module)

Q = getattr(module, entry)(ChainEnv(), episodes=300, alpha=0.5, gamma=0.9, epsilon=0.2, seed=0)
assert len(Q) == 5 and all(len(row) == 2 for row in Q), "Q must be 5 x 2"
for s in range(4):
    assert Q[s][1] > Q[s][0], f"greedy action in state {s} should move right"
assert abs(Q[3][1] - 1.0) < 0.05, f"Q[3][1] = {Q[3][1]:.3f}, expected about 1.0"
print("ok")
