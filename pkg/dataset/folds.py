"""
Cross-validation folds by site: all meters of one site land in the same fold,
so no test meter shares a site with a training meter
"""
from collections import Counter
from dataclasses import dataclass

import logger
from common import settings
from common.helper import rng_for
from common.exceptions import GridFillError, ValidationError
from dataset.dataset_exceptions import TooFewSitesError, StoreError


@dataclass(frozen=True)
class FoldAssignment(object):
    fold_count: int
    sites: dict  # site_id -> fold index

    def fold_of(self, site_id) -> int:
        return self.sites[site_id]

    def sites_in(self, fold) -> list:
        return sorted(site for site, index in self.sites.items() if index == fold)

    def to_text(self) -> str:
        return "".join(f"{site},{fold}\n" for site, fold in sorted(self.sites.items()))

    @classmethod
    def from_text(cls, text, fold_count=None):
        fold_count = settings.Settings().Dataset.FoldCount if fold_count is None else fold_count
        sites = {}
        for line_number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                site, fold = line.rsplit(",", 1)
                fold = int(fold)
            except ValueError:
                raise StoreError(f"Fold file line {line_number}: expected 'site_id,fold_index', got {line!r}") from None
            if not 0 <= fold < fold_count:
                raise StoreError(f"Fold file line {line_number}: fold index {fold} outside [0, {fold_count})")
            if site in sites:
                raise StoreError(f"Fold file line {line_number}: site {site!r} assigned twice")
            sites[site] = fold
        return cls(fold_count=fold_count, sites=sites)


@dataclass(frozen=True)
class CrossValidationRound(object):
    index: int
    train_folds: tuple
    val_fold: int
    test_fold: int


def split_by_site(items, seed, fold_count=None) -> FoldAssignment:
    """
    Greedy balancing of meter counts: sites sorted by meter count (largest first, ties in seeded
    random order) each go to the fold holding the fewest meters so far (ties to the lowest index)

    :param items: anything with a site_id (records or images), one per meter
    """
    fold_count = settings.Settings().Dataset.FoldCount if fold_count is None else fold_count
    counts = Counter(item.site_id for item in items)
    if len(counts) < fold_count:
        raise TooFewSitesError(fold_count, len(counts))
    sites = sorted(counts)
    tie_break = dict(zip(sites, rng_for(seed, "split_by_site").permutation(len(sites)).tolist()))
    ordered = sorted(sites, key=lambda site: (-counts[site], tie_break[site]))

    loads = [0] * fold_count
    assignment = {}
    for site in ordered:
        fold = loads.index(min(loads))
        assignment[site] = fold
        loads[fold] += counts[site]
    logger.info(f"Split {len(sites)} sites into {fold_count} folds holding {loads} meters")
    return FoldAssignment(fold_count=fold_count, sites=assignment)


def cross_validation_round(index, fold_count=None) -> CrossValidationRound:
    """
    Round r trains on folds r .. r + fold_count - 3, validates on r + fold_count - 2 and tests on r + fold_count - 1 (mod fold_count)
    """
    fold_count = settings.Settings().Dataset.FoldCount if fold_count is None else fold_count
    if not 0 <= index < fold_count:
        raise ValidationError(f"Round {index} outside [0, {fold_count})")
    folds = [(index + offset) % fold_count for offset in range(fold_count)]
    return CrossValidationRound(index=index, train_folds=tuple(folds[:-2]), val_fold=folds[-2], test_fold=folds[-1])


def split_round(items, assignment: FoldAssignment, index):
    """
    :return: (train, val, test) lists of items for given round
    """
    round_ = cross_validation_round(index, assignment.fold_count)
    train, val, test = [], [], []
    for item in items:
        fold = assignment.fold_of(item.site_id)
        if fold in round_.train_folds:
            train.append(item)
        elif fold == round_.val_fold:
            val.append(item)
        else:
            test.append(item)
    check_disjoint_sites(train, val, test)
    return train, val, test


def check_disjoint_sites(*sets):
    seen = {}
    for set_index, items in enumerate(sets):
        for item in items:
            if seen.setdefault(item.site_id, set_index) != set_index:
                raise GridFillError(f"Site {item.site_id} appears in more than one of train/val/test")
