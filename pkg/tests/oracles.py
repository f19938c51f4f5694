"""Independent brute-force oracles for derived expectations.

Nothing here imports the package under test; each function is a direct,
unoptimized restatement of the quantity it checks so tests compare two
separately written routes.
"""

import itertools
import math


def w1_factorial(a, b) -> float:
    """Exact empirical W1 for equal-size point sets by trying all n! matchings."""

    assert len(a) == len(b)
    n = len(a)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = 0.0
        for i, j in enumerate(perm):
            cost += math.dist(a[i], b[j])
        best = min(best, cost / n)
    return best


def powerset_in_local_order(n: int):
    """Every n-bit mask, fewest removals first, removed sets lexicographic."""

    masks = []
    for bits in itertools.product((0, 1), repeat=n):
        removed = tuple(i for i, b in enumerate(bits) if b == 0)
        masks.append((len(removed), removed, bits))
    masks.sort(key=lambda t: (t[0], t[1]))
    return [bits for _, _, bits in masks]


def iou_by_hand(scores, gt) -> float:
    top = max(scores)
    pred = {i for i, s in enumerate(scores) if s == top}
    return len(pred & set(gt)) / len(pred | set(gt))


def hpd_by_hand(scores, gt) -> float:
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    best_rank = min(order.index(g) + 1 for g in gt)
    return 1.0 / best_rank


def snr_by_hand(scores, gt):
    gt = set(gt)
    noise = [s for i, s in enumerate(scores) if i not in gt]
    if len(noise) < 2:
        return None
    mean_gt = sum(scores[i] for i in gt) / len(gt)
    mean_noise = sum(noise) / len(noise)
    var = sum((v - mean_noise) ** 2 for v in noise) / (len(noise) - 1)
    if var == 0.0:
        return None
    return mean_gt**2 / var


def nb_two_doc_posterior() -> float:
    """P(pos | "good good") for the corpus {("good",pos), ("bad",neg)}.

    Mean count of "good" in pos is 1, in neg 0; add-one smoothing over a
    2-word vocabulary with mean document length 1 gives per-occurrence
    likelihoods 2/3 vs 1/3, so two occurrences give odds (2/3)^2:(1/3)^2.
    """

    odds = (2 / 3) ** 2 / (1 / 3) ** 2
    return odds / (1 + odds)
