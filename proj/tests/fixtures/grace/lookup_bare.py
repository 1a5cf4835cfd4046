def lookup(table, key):
    value = table[key]
    return value
