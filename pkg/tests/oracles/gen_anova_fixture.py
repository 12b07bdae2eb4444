"""Generate the repeated-measures ANOVA oracle fixture.

Run manually: python tests/oracles/gen_anova_fixture.py

F and the uncorrected p come from statsmodels AnovaRM; the sphericity
epsilon is computed from the definitional double-centered covariance trace
formula; Mauchly's W from the determinant form with Helmert contrasts; all
p-values from scipy distributions. The printed values are frozen into
tests/test_stats.py.
"""

import numpy as np
import pandas as pd
from scipy import stats as sps
from statsmodels.stats.anova import AnovaRM

# 8 subjects x 5 conditions, two-decimal ratings in [1, 5] with unequal
# condition variances so that sphericity is decisively rejected.
MATRIX = np.array([
    [2.40, 2.50, 3.10, 3.70, 2.84],
    [2.19, 2.88, 2.68, 4.23, 2.37],
    [2.84, 3.05, 3.43, 3.86, 3.15],
    [2.52, 2.92, 3.14, 4.18, 2.75],
    [2.70, 2.06, 3.09, 3.31, 2.65],
    [2.53, 2.45, 2.93, 3.40, 2.54],
    [3.29, 3.94, 3.58, 3.33, 3.03],
    [2.79, 3.42, 3.20, 3.91, 2.71],
])


def main():
    s, k = MATRIX.shape
    subjects = np.repeat(np.arange(s), k)
    conditions = np.tile(np.arange(k), s)
    df = pd.DataFrame({
        "subject": subjects,
        "condition": conditions,
        "rating": MATRIX.ravel(),
    })
    fit = AnovaRM(df, depvar="rating", subject="subject", within=["condition"]).fit()
    table = fit.anova_table
    f_value = float(table["F Value"].iloc[0])
    df1 = float(table["Num DF"].iloc[0])
    df2 = float(table["Den DF"].iloc[0])
    p_uncorrected = float(table["Pr > F"].iloc[0])

    # Greenhouse-Geisser epsilon: double-centered covariance trace form.
    cov = np.cov(MATRIX, rowvar=False, ddof=1)
    centered = (
        cov
        - cov.mean(axis=0, keepdims=True)
        - cov.mean(axis=1, keepdims=True)
        + cov.mean()
    )
    eps = np.trace(centered) ** 2 / ((k - 1) * np.sum(centered * centered))

    # Mauchly's W: determinant form with normalized Helmert contrasts.
    helmert = np.zeros((k - 1, k))
    for i in range(k - 1):
        helmert[i, : i + 1] = 1.0
        helmert[i, i + 1] = -(i + 1.0)
        helmert[i] /= np.linalg.norm(helmert[i])
    t = helmert @ cov @ helmert.T
    w = np.linalg.det(t) / (np.trace(t) / (k - 1)) ** (k - 1)
    box = 1 - (2 * (k - 1) ** 2 + (k - 1) + 2) / (6 * (k - 1) * (s - 1))
    chi2 = -(s - 1) * box * np.log(w)
    mauchly_df = k * (k - 1) / 2 - 1
    mauchly_p = sps.chi2.sf(chi2, mauchly_df)

    p_gg = sps.f.sf(f_value, eps * df1, eps * df2)
    eta_sq = f_value * df1 / (f_value * df1 + df2)

    print(f"f_value       = {f_value!r}")
    print(f"p_uncorrected = {p_uncorrected!r}")
    print(f"gg_epsilon    = {eps!r}")
    print(f"mauchly_w     = {w!r}")
    print(f"mauchly_p     = {mauchly_p!r}")
    print(f"p_gg          = {p_gg!r}")
    print(f"eta_squared   = {eta_sq!r}")
    print(f"df1 = {df1!r}, df2 = {df2!r}")
    print(f"df1_gg = {eps * df1!r}, df2_gg = {eps * df2!r}")


if __name__ == "__main__":
    main()
