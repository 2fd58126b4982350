"""Enumerates every selection sequence of the MMR greedy loop for the worked
2-D example and reports the sequence that greedy argmax picks."""
import math
from itertools import permutations

B = (0.707, 0.707)
E = {"a": (1.0, 0.0), "b": (0.0, 1.0), "c": (0.6, 0.8)}
LAM = 0.5


def cos(u, v):
    return (u[0] * v[0] + u[1] * v[1]) / (math.hypot(*u) * math.hypot(*v))


def mmr(t, chosen):
    sd = cos(E[t], B)
    sk = max((cos(E[t], E[k]) for k in chosen), default=0.0)
    return LAM * sd - (1 - LAM) * sk, sd, sk


best = None
for seq in permutations(E, 2):
    # a sequence is greedy-consistent iff each pick maximises MMR at its round
    ok = True
    for i, t in enumerate(seq):
        chosen = seq[:i]
        rest = [u for u in E if u not in chosen]
        top = max(mmr(u, chosen)[0] for u in rest)
        if mmr(t, chosen)[0] < top:
            ok = False
    if ok:
        best = seq
    print(seq, [tuple(round(v, 6) for v in mmr(t, seq[:i])) for i, t in enumerate(seq)], ok)
print("greedy:", best)
