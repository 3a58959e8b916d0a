"""Pure-Python max-coverage profile (reference for the Cython kernel)."""


def coverage_profile(masks, max_sets):
    """Best union size using at most ``d`` of ``masks`` for every d <= max_sets.

    Depth-first branch and bound, include-first in candidate order. A node is
    expanded only while some deeper level can still beat its incumbent, using
    the sum of the largest remaining marginal gains as the bound.

    Returns ``(best, choice)`` where ``best[d]`` is the coverage and
    ``choice[d]`` a tuple of candidate positions achieving it; ``best`` is
    non-decreasing.
    """
    n = len(masks)
    best = [0] * (max_sets + 1)
    choice = [()] * (max_sets + 1)
    if n == 0 or max_sets <= 0:
        return best, choice
    union_all = 0
    for m in masks:
        union_all |= m
    limit = union_all.bit_count()
    chosen = []

    def record(depth, count):
        sel = tuple(chosen)
        for d in range(depth, max_sets + 1):
            if count > best[d]:
                best[d] = count
                choice[d] = sel

    def promising(start, covered, count, depth):
        r = max_sets - depth
        gains = sorted(((masks[i] & ~covered).bit_count() for i in range(start, n)), reverse=True)
        acc = count
        for j in range(min(r, len(gains))):
            acc += gains[j]
            if min(acc, limit) > best[depth + j + 1]:
                return True
        return False

    def dfs(start, covered, count):
        depth = len(chosen)
        if count > best[depth]:
            record(depth, count)
        if depth == max_sets or count == limit:
            return
        if not promising(start, covered, count, depth):
            return
        for i in range(start, n):
            gain = masks[i] & ~covered
            if not gain:
                continue
            chosen.append(i)
            dfs(i + 1, covered | masks[i], count + gain.bit_count())
            chosen.pop()

    dfs(0, 0, 0)
    return best, choice
