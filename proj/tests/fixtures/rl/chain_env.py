class ChainEnv:
    """Five-state corridor; moving right from state 3 reaches the goal."""

    n_states = 5
    n_actions = 2

    def __init__(self):
        self.state = 0

    def reset(self):
        self.state = 0
        return self.state

    def step(self, action):
        if action == 1:
            self.state += 1
        else:
            self.state = max(0, self.state - 1)
        done = self.state == self.n_states - 1
        return self.state, (1.0 if done else 0.0), done


def chain_model(n_states=5):
    """Transition lists P[s][a] = [(prob, next)] and rewards R[s][a]."""
    P, R = [], []
    for s in range(n_states):
        if s == n_states - 1:
            P.append([[(1.0, s)], [(1.0, s)]])
            R.append([0.0, 0.0])
            continue
        right = s + 1
        P.append([[(1.0, max(0, s - 1))], [(1.0, right)]])
        R.append([0.0, 1.0 if right == n_states - 1 else 0.0])
    return P, R
