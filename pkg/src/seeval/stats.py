"""Vote aggregation and statistical inference for listening-test results.

Covers MOS aggregation, Pearson correlation, one-way repeated-measures
ANOVA with Mauchly's sphericity test and Greenhouse-Geisser correction,
and Holm-Bonferroni-adjusted paired post-hoc comparisons.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import _special
from .errors import (
    DegenerateInput,
    DegenerateVariance,
    EmptyVotes,
    IncompleteMatrix,
    MissingMetric,
)

DEFAULT_ALPHA = 0.01

SCALES = ("SIG", "BAK", "OVRL")


@dataclass(frozen=True)
class VoteMatrix:
    """Complete subject x condition matrix of ratings in [1, 5]."""

    values: np.ndarray
    subject_ids: tuple
    condition_ids: tuple
    scale: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("vote matrix must be 2-D (subjects x conditions)")
        if values.shape != (len(self.subject_ids), len(self.condition_ids)):
            raise ValueError("matrix shape does not match id lists")
        if np.isnan(values).any():
            raise IncompleteMatrix("vote matrix has missing cells")
        if ((values < 1.0) | (values > 5.0)).any():
            raise ValueError("ratings must lie in [1, 5]")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "subject_ids", tuple(self.subject_ids))
        object.__setattr__(self, "condition_ids", tuple(self.condition_ids))


@dataclass(frozen=True)
class AnovaResult:
    f_value: float
    df_effect: float
    df_error: float
    p_value: float
    eta_squared: float
    gg_epsilon: float
    mauchly_w: float
    mauchly_p: float
    correction_applied: bool


@dataclass(frozen=True)
class PairComparison:
    cond_a: str
    cond_b: str
    t_value: float
    raw_p: float
    adjusted_p: float
    significant_at_alpha: bool


@dataclass(frozen=True)
class PosthocResult:
    pairs: tuple
    alpha: float


def compute_mos(votes) -> float:
    """Arithmetic mean of Likert votes (each in 1..5)."""
    votes = list(votes)
    if not votes:
        raise EmptyVotes("MOS requires at least one vote")
    for v in votes:
        if not 1 <= v <= 5:
            raise ValueError(f"vote {v} outside 1..5")
    return sum(votes) / len(votes)


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size:
        raise DegenerateInput("inputs differ in length")
    if x.size < 3:
        raise DegenerateInput("need at least 3 points")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if denom == 0.0:
        raise DegenerateInput("zero variance input")
    return float(np.dot(xc, yc) / denom)


def correlation_matrix(columns, metric_ids) -> np.ndarray:
    """Symmetric PCC matrix over named, sample-aligned score columns."""
    metric_ids = list(metric_ids)
    for mid in metric_ids:
        if mid not in columns:
            raise MissingMetric(f"metric {mid!r} absent from score columns")
    k = len(metric_ids)
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            r = pearson(columns[metric_ids[i]], columns[metric_ids[j]])
            out[i, j] = out[j, i] = r
    return out


def _orthonormal_contrasts(k: int) -> np.ndarray:
    """(k-1) x k orthonormal rows spanning the complement of the mean."""
    basis = np.eye(k) - 1.0 / k
    q, _ = np.linalg.qr(basis[:, : k - 1])
    return q.T  # rows orthonormal, each orthogonal to the ones vector


def _sphericity(values: np.ndarray):
    """Mauchly's W with chi-square p, and Greenhouse-Geisser epsilon."""
    s, k = values.shape
    cov = np.cov(values, rowvar=False, ddof=1)
    contrasts = _orthonormal_contrasts(k)
    t = contrasts @ cov @ contrasts.T
    eig = np.linalg.eigvalsh(t)
    eig = np.maximum(eig, 0.0)
    mean_eig = eig.mean()
    if mean_eig == 0.0:
        return 1.0, 1.0, 1.0  # degenerate (constant) data: sphericity holds

    gg_epsilon = float(eig.sum() ** 2 / ((k - 1) * np.sum(eig ** 2)))
    gg_epsilon = min(1.0, max(1.0 / (k - 1), gg_epsilon))

    w = float(np.prod(eig / mean_eig))
    w = min(max(w, 0.0), 1.0)
    if w <= 0.0:
        return 0.0, 0.0, gg_epsilon
    box = 1.0 - (2.0 * (k - 1) ** 2 + (k - 1) + 2.0) / (6.0 * (k - 1) * (s - 1))
    chi2 = -(s - 1.0) * box * np.log(w)
    df = k * (k - 1) / 2.0 - 1.0
    mauchly_p = _special.chi2_sf(float(chi2), df) if df > 0 else 1.0
    return w, mauchly_p, gg_epsilon


def rm_anova(m: VoteMatrix, alpha: float = DEFAULT_ALPHA) -> AnovaResult:
    """One-way repeated-measures ANOVA over the condition factor.

    Applies the Greenhouse-Geisser correction to both degrees of freedom
    when Mauchly's test rejects sphericity at ``alpha``. Effect size is
    partial eta squared: SS_condition / (SS_condition + SS_error).
    """
    values = m.values
    s, k = values.shape
    if k < 2 or s < 2:
        raise DegenerateInput("need at least 2 subjects and 2 conditions")

    grand = values.mean()
    ss_cond = s * float(np.sum((values.mean(axis=0) - grand) ** 2))
    ss_subj = k * float(np.sum((values.mean(axis=1) - grand) ** 2))
    ss_total = float(np.sum((values - grand) ** 2))
    ss_err = ss_total - ss_cond - ss_subj

    df_effect = float(k - 1)
    df_error = float((k - 1) * (s - 1))

    if ss_err <= 0.0:
        ss_err = max(ss_err, 0.0)
        if ss_cond == 0.0:
            return AnovaResult(0.0, df_effect, df_error, 1.0, 0.0, 1.0, 1.0, 1.0, False)
        raise DegenerateVariance("zero error variance with non-zero effect")

    if k == 2:
        w, mauchly_p, gg_epsilon = 1.0, 1.0, 1.0  # sphericity trivial for k = 2
    else:
        w, mauchly_p, gg_epsilon = _sphericity(values)

    f_value = (ss_cond / df_effect) / (ss_err / df_error)
    correction = k > 2 and mauchly_p < alpha
    if correction:
        df_effect *= gg_epsilon
        df_error *= gg_epsilon
    p_value = _special.f_sf(f_value, df_effect, df_error)
    eta_squared = ss_cond / (ss_cond + ss_err)
    return AnovaResult(
        f_value=float(f_value),
        df_effect=df_effect,
        df_error=df_error,
        p_value=float(p_value),
        eta_squared=float(eta_squared),
        gg_epsilon=float(gg_epsilon),
        mauchly_w=float(w),
        mauchly_p=float(mauchly_p),
        correction_applied=correction,
    )


def holm_adjust(raw_p) -> list:
    """Holm step-down adjustment: sorted ascending, cumulative max of
    min(1, (m - rank + 1) * p)."""
    raw_p = list(raw_p)
    m = len(raw_p)
    order = sorted(range(m), key=lambda i: raw_p[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, min(1.0, (m - rank) * raw_p[idx]))
        adjusted[idx] = running
    return adjusted


def holm_posthoc(m: VoteMatrix, alpha: float = DEFAULT_ALPHA) -> PosthocResult:
    """All-pairs two-sided paired t-tests with Holm-Bonferroni correction.

    A pair with zero difference variance is reported as t = 0, p = 1.
    """
    values = m.values
    s, k = values.shape
    if k < 2 or s < 2:
        raise DegenerateInput("need at least 2 subjects and 2 conditions")
    pairs = []
    raw = []
    for i in range(k):
        for j in range(i + 1, k):
            d = values[:, i] - values[:, j]
            sd = d.std(ddof=1)
            if sd == 0.0:
                t_value, p = 0.0, 1.0
            else:
                t_value = float(d.mean() / (sd / np.sqrt(s)))
                p = _special.t_sf_two_sided(t_value, s - 1)
            pairs.append((m.condition_ids[i], m.condition_ids[j], t_value))
            raw.append(p)
    adjusted = holm_adjust(raw)
    result = tuple(
        PairComparison(a, b, t, rp, ap, ap < alpha)
        for (a, b, t), rp, ap in zip(pairs, raw, adjusted)
    )
    return PosthocResult(pairs=result, alpha=alpha)


def vote_matrix_from_csv(path, scale: str) -> VoteMatrix:
    """Matrix CSV: header 'subject,<cond1>,<cond2>,...', one row per subject."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    condition_ids = tuple(h.strip() for h in header[1:])
    subject_ids = tuple(r[0].strip() for r in body)
    values = np.array([[float(v) for v in r[1:]] for r in body])
    return VoteMatrix(values, subject_ids, condition_ids, scale)


def vote_matrix_from_jsonl(path, scale: str, conditions=None) -> VoteMatrix:
    """Build a matrix from a test-service vote export (JSONL).

    Practice votes are skipped. Each cell is the participant's mean rating
    for that condition over all rated samples.
    """
    cells = {}
    condition_set = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("practice") or rec["scale"] != scale:
                continue
            key = (rec["participant_id"], rec["condition_id"])
            cells.setdefault(key, []).append(rec["vote"])
            if rec["condition_id"] not in condition_set:
                condition_set.append(rec["condition_id"])
    if conditions is None:
        conditions = condition_set
    subjects = sorted({p for p, _ in cells})
    values = np.full((len(subjects), len(conditions)), np.nan)
    for (participant, condition), votes in cells.items():
        if condition in conditions:
            values[subjects.index(participant), conditions.index(condition)] = (
                sum(votes) / len(votes)
            )
    return VoteMatrix(values, tuple(subjects), tuple(conditions), scale)
