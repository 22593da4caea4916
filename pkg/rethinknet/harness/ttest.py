from typing import Dict, Iterable, Sequence
from dataclasses import dataclass, asdict
import enum
import math

import numpy as np
import scipy.stats

from rethinknet.common.errors import DimensionError, SizeError

ALPHA = 0.05


class Verdict(str, enum.Enum):
    WIN = 'win'
    TIE = 'tie'
    LOSS = 'loss'


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    p_value: float
    verdict: Verdict
    mean_difference: float
    n: int

    def to_dict(self) -> Dict:
        d = asdict(self)
        d['verdict'] = self.verdict.value
        # inf is not valid JSON
        if math.isinf(self.statistic):
            d['statistic'] = 'inf' if self.statistic > 0 else '-inf'
        return d

    @classmethod
    def from_dict(cls, d: Dict) -> 'TTestResult':
        return cls(
            statistic=float(d['statistic']),
            p_value=float(d['p_value']),
            verdict=Verdict(d['verdict']),
            mean_difference=float(d['mean_difference']),
            n=int(d['n']))


def paired_ttest(a: Sequence[float], b: Sequence[float],
        lower_is_better: bool = False,
        alpha: float = ALPHA) -> TTestResult:
    """
    Two-sided paired t-test of ``a`` against ``b``. A significant mean
    difference is a win for ``a`` when it points in the better direction.
    Constant nonzero differences get p = 0, all-zero differences a tie.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"paired samples must be equal-length vectors, got {a.shape}, {b.shape}")
    if len(a) < 2:
        raise SizeError(f"need at least 2 pairs, got {len(a)}")

    diff = a - b
    mean_diff = float(diff.mean())
    if np.all(diff == 0):
        statistic, p_value = 0.0, 1.0
    elif np.all(diff == diff[0]):
        statistic, p_value = math.copysign(math.inf, mean_diff), 0.0
    else:
        statistic, p_value = scipy.stats.ttest_rel(a, b)
        statistic, p_value = float(statistic), float(p_value)

    if p_value >= alpha or mean_diff == 0:
        verdict = Verdict.TIE
    elif (mean_diff < 0) == lower_is_better:
        verdict = Verdict.WIN
    else:
        verdict = Verdict.LOSS
    return TTestResult(
        statistic=statistic,
        p_value=p_value,
        verdict=verdict,
        mean_difference=mean_diff,
        n=len(a))


@dataclass
class VerdictTally:
    win: int = 0
    tie: int = 0
    loss: int = 0

    def __add__(self, other: 'VerdictTally') -> 'VerdictTally':
        return VerdictTally(self.win + other.win, self.tie + other.tie, self.loss + other.loss)

    @property
    def total(self) -> int:
        return self.win + self.tie + self.loss

    def __str__(self):
        return f"{self.win}/{self.tie}/{self.loss}"

    def to_dict(self) -> Dict:
        return asdict(self)


def tally_verdicts(results: Iterable[TTestResult]) -> VerdictTally:
    tally = VerdictTally()
    for result in results:
        verdict = Verdict(result.verdict)
        if verdict is Verdict.WIN:
            tally.win += 1
        elif verdict is Verdict.TIE:
            tally.tie += 1
        else:
            tally.loss += 1
    return tally
