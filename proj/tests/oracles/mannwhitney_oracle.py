"""Reference Mann-Whitney U values for the stats unit tests.

Small samples: brute-force enumeration of every split of the pooled midranks.
Large samples: scipy's asymptotic method (tie and continuity corrected).
"""
import itertools

from scipy.stats import mannwhitneyu, rankdata


def exact(a, b):
    pooled = list(a) + list(b)
    ranks = rankdata(pooled)
    na = len(a)
    base = na * (na + 1) / 2
    u_obs = sum(ranks[:na]) - base
    mu = na * len(b) / 2
    total = extreme = 0
    for idx in itertools.combinations(range(len(pooled)), na):
        u = sum(ranks[i] for i in idx) - base
        total += 1
        if abs(u - mu) >= abs(u_obs - mu) - 1e-9:
            extreme += 1
    return u_obs, extreme / total


CASES_EXACT = {
    "separation_5v5": ([1, 2, 3, 4, 5], [6, 7, 8, 9, 10]),
    "identical_3": ([1, 2, 3], [1, 2, 3]),
    "ties_5v5": ([1, 2, 2, 3, 5], [2, 4, 4, 6, 7]),
    "unequal_4v7": ([3.5, 8, 1, 9], [2, 4, 5, 6, 7, 10, 11]),
}

CASES_ASYMPTOTIC = {
    "ties_15v14": (
        [3, 5, 5, 7, 8, 8, 8, 10, 12, 12, 13, 15, 17, 17, 20],
        [1, 2, 2, 4, 5, 6, 8, 9, 9, 10, 11, 11, 14, 16],
    ),
    "distinct_20v20": (list(range(0, 40, 2)), list(range(1, 41, 2))[::-1]),
}

if __name__ == "__main__":
    for name, (a, b) in CASES_EXACT.items():
        u, p = exact(a, b)
        print(f"{name}: U={u} p={p!r}")
    for name, (a, b) in CASES_ASYMPTOTIC.items():
        r = mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
        print(f"{name}: U={r.statistic} p={r.pvalue!r}")
