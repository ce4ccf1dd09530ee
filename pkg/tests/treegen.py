"""Random concrete trees: depth <= 3, at most 6 leaves, gates AND/OR/SAND/SOR/VOT, integer attributes <= 20."""

import random


def random_tree(rng: random.Random) -> str:
    count = [0]
    lines = []

    def node(depth, budget):
        count[0] += 1
        name = f"n{count[0]}"
        if depth == 0 or budget < 2 or rng.random() < 0.3:
            lo = rng.randint(0, 20)
            hi = rng.randint(lo, 20)
            lines.append(f'"{name}" mintime={lo} maxtime={hi} cost={rng.randint(0, 20)} '
                         f'damage={rng.randint(0, 20)};')
            return name, 1
        k = rng.randint(2, min(3, budget))
        kind = rng.choice(["and", "or", "sand", "sor", "vot"])
        kids, used = [], 0
        for i in range(k):
            rest = budget - used - (k - i - 1)
            c, u = node(depth - 1, max(1, rest))
            kids.append(c)
            used += u
        if kind == "vot":
            kind = f"{rng.randint(1, k)}of{k}"
        lines.append(f'"{name}" {kind} ' + " ".join(f'"{c}"' for c in kids) + ";")
        return name, used

    root, _ = node(3, 6)
    return f'toplevel "{root}";\n' + "\n".join(lines)
