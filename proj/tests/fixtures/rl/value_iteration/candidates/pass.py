def value_iteration(P, R, gamma=0.9, theta=1e-8):
    n = len(P)
    V = [0.0] * n
    while True:
        delta = 0.0
        for s in range(n):
            best = max(
                R[s][a] + gamma * sum(p * V[t] for p, t in P[s][a])
                for a in range(len(P[s]))
            )
            delta = max(delta, abs(best - V[s]))
            V[s] = best
        if delta < theta:
            break
    policy = []
    for s in range(n):
        q = [R[s][a] + gamma * sum(p * V[t] for p, t in P[s][a]) for a in range(len(P[s]))]
        policy.append(max(range(len(q)), key=q.__getitem__))
    return V, policy


if __name__ == "__main__":
    P = [[[(1.0, 0)], [(1.0, 1)]], [[(1.0, 0)], [(1.0, 1)]]]
    R = [[0.0, 1.0], [0.0, 0.0]]
    print(value_iteration(P, R))
