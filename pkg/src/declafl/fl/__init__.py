"""Fault localization: formulas, hit-maps, rankings and the five techniques."""

from declafl.fl.formulas import DSTAR_CAP, FORMULAS, Formula, compute_suspiciousness
from declafl.fl.hitmap import HitMap, record_core_hit
from declafl.fl.ranking import Entry, collapse_report, rank
from declafl.fl.techniques import (TECHNIQUES, co_scores, default_workers, fl_co, fl_hy, fl_mu,
                                   fl_su, fl_un, hy_scores, localize, mu_scores)

__all__ = [
    "DSTAR_CAP", "FORMULAS", "Formula", "compute_suspiciousness", "HitMap", "record_core_hit",
    "Entry", "collapse_report", "rank", "TECHNIQUES", "co_scores", "default_workers", "fl_co",
    "fl_hy", "fl_mu", "fl_su", "fl_un", "hy_scores", "localize", "mu_scores",
]
