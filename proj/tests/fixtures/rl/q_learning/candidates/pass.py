import random


def epsilon_greedy(row, epsilon, rng):
    if rng.random() < epsilon:
        return rng.randrange(len(row))
    best = max(row)
    return row.index(best)


def q_learning(env, episodes=300, alpha=0.5, gamma=0.9, epsilon=0.2, seed=0):
    rng = random.Random(seed)
    Q = [[0.0] * env.n_actions for _ in range(env.n_states)]
    for _ in range(episodes):
        state = env.reset()
        for _ in range(100):
            action = epsilon_greedy(Q[state], epsilon, rng)
            nxt, reward, done = env.step(action)
            target = reward if done else reward + gamma * max(Q[nxt])
            Q[state][action] += alpha * (target - Q[state][action])
            state = nxt
            if done:
                break
    return Q


class _Corridor:
    n_states = 5
    n_actions = 2

    def reset(self):
        self.s = 0
        return 0

    def step(self, action):
        self.s = self.s + 1 if action == 1 else max(0, self.s - 1)
        done = self.s == 4
        return self.s, (1.0 if done else 0.0), done


if __name__ == "__main__":
    print(q_learning(_Corridor(), episodes=300))
