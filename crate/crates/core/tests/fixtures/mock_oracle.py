"""Reference values for the mock trigram encoder, computed without the crate."""
import json
import math

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data):
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def encode(text, dim):
    chars = list(text.lower())
    acc = [0.0] * dim
    for i in range(len(chars) - 2):
        h = fnv1a64("".join(chars[i:i + 3]).encode("utf-8"))
        acc[h % dim] += -1.0 if (h // dim) & 1 else 1.0
    norm = math.sqrt(sum(x * x for x in acc))
    return [x / norm for x in acc]


def cosine(a, b):
    return sum(x * y for x, y in zip(a, b))


if __name__ == "__main__":
    vectors = [
        {"text": text, "dim": dim, "values": encode(text, dim)}
        for text, dim in [("abc", 8), ("Hello World", 16), ("the cat sat on the mat", 32)]
    ]
    pair = ("abcdefgh", "stuvwxyz")
    out = {
        "vectors": vectors,
        "disjoint_pair": {
            "a": pair[0],
            "b": pair[1],
            "dim": 4096,
            "cosine": cosine(encode(pair[0], 4096), encode(pair[1], 4096)),
        },
    }
    with open("mock_vectors.json", "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")
