import fancy_arithmetic_helpers


def add(a, b):
    return a + b
