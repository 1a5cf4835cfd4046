import random

from rl_toolkit.policies import epsilon_greedy


def choose(row, epsilon, rng):
    if rng.random() < epsilon:
        return rng.randrange(len(row))
    return max(range(len(row)), key=lambda a: row[a])


def sarsa(env, episodes=300, alpha=0.5, gamma=0.9, epsilon=0.2, seed=0):
    rng = random.Random(seed)
    Q = [[0.0 for _ in range(env.n_actions)] for _ in range(env.n_states)]
    for _ in range(episodes):
        state = env.reset()
        action = choose(Q[state], epsilon, rng)
        for _ in range(100):
            nxt, reward, done = env.step(action)
            if done:
                Q[state][action] += alpha * (reward - Q[state][action])
                break
            nxt_action = choose(Q[nxt], epsilon, rng)
            td = reward + gamma * Q[nxt][nxt_action] - Q[state][action]
            Q[state][action] += alpha * td
            state, action = nxt, nxt_action
    return Q


if __name__ == "__main__":
    class Line:
        n_states, n_actions = 5, 2

        def reset(self):
            self.s = 0
            return 0

        def step(self, a):
            self.s = self.s + 1 if a == 1 else max(0, self.s - 1)
            return self.s, float(self.s == 4), self.s == 4

    print(sarsa(Line()))
