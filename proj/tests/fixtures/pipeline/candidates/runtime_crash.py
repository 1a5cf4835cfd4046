def add(a, b):
    return a + b


if __name__ == "__main__":
    values = [1, 2]
    print(add(values[0], values[2]))
