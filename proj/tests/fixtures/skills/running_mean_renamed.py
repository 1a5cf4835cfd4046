def running_mean(xs):
    acc = 0.0
    for x in xs:
        acc += x
    return acc / len(xs)
