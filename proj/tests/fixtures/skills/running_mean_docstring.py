def running_mean(values):
    """Arithmetic mean.

    Raises ZeroDivisionError on an empty list.
    """
    total = 0.0
    for v in values:
        total += v
    return total / len(values)
