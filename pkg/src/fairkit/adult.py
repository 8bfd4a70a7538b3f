"""Coarse discretization of the UCI Adult census file.

The raw file (``adult.data``, 15 comma-separated fields, no header) is not
bundled. :func:`load_adult` maps it onto six variables:

==== =========================================== ==============================
name meaning                                     labels
==== =========================================== ==============================
G    sex                                         female, male
C    age band and nationality                    e.g. ``30-49/us``
M    marital status                              married, single
E    education                                   hs, college, bachelors, graduate
W    occupation group and weekly hours           e.g. ``white/full``
O    income above 50K                            0, 1
==== =========================================== ==============================

Rows with missing fields (``?``) keep an ``other`` label rather than being
dropped, so the group means match the full file. Work class is not folded
into ``W``: with it the mediator strata get too sparse for plug-in
interventional estimates.
"""
from __future__ import annotations

import csv
from collections import Counter
from pathlib import Path

from .data import Dataset
from .errors import DatasetError

__all__ = ["ADULT_COLUMNS", "ADULT_DOMAINS", "discretize", "load_adult"]

ADULT_COLUMNS = ("G", "C", "M", "E", "W", "O")

_AGES = ("<30", "30-49", "50+")
_ORIGINS = ("us", "other")
_JOBS = ("white", "blue", "service", "other")
_HOURS = ("part", "full", "over")

ADULT_DOMAINS = {
    "G": ("female", "male"),
    "C": tuple(f"{a}/{o}" for a in _AGES for o in _ORIGINS),
    "M": ("married", "single"),
    "E": ("hs", "college", "bachelors", "graduate"),
    "W": tuple(f"{j}/{h}" for j in _JOBS for h in _HOURS),
    "O": ("0", "1"),
}

_EDU = {
    "Some-college": "college", "Assoc-voc": "college", "Assoc-acdm": "college",
    "Bachelors": "bachelors",
    "Masters": "graduate", "Prof-school": "graduate", "Doctorate": "graduate",
}
_OCCUPATION = {
    "Exec-managerial": "white", "Prof-specialty": "white", "Tech-support": "white",
    "Sales": "white", "Adm-clerical": "white",
    "Craft-repair": "blue", "Machine-op-inspct": "blue", "Transport-moving": "blue",
    "Handlers-cleaners": "blue", "Farming-fishing": "blue",
    "Other-service": "service", "Protective-serv": "service", "Priv-house-serv": "service",
}


def discretize(fields) -> tuple[str, ...]:
    """Map one raw record (15 stripped strings) to ``ADULT_COLUMNS`` labels."""
    age, _, _, edu, _, marital, occ, _, _, sex, _, _, hours, country, income = fields
    a = int(age)
    band = "<30" if a < 30 else "30-49" if a < 50 else "50+"
    origin = "us" if country == "United-States" else "other"
    h = int(hours)
    span = "part" if h < 40 else "full" if h <= 40 else "over"
    return (
        "female" if sex == "Female" else "male",
        f"{band}/{origin}",
        "married" if marital in ("Married-civ-spouse", "Married-AF-spouse") else "single",
        _EDU.get(edu, "hs"),
        f"{_OCCUPATION.get(occ, 'other')}/{span}",
        "1" if income.rstrip(".") == ">50K" else "0",
    )


def load_adult(path) -> Dataset:
    """Read ``adult.data`` (or ``adult.test``) into a weighted :class:`Dataset`."""
    path = Path(path)
    counts = Counter()
    with path.open(newline="", encoding="utf-8") as fh:
        for no, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("|"):
                continue
            if len(row) != 15:
                raise DatasetError(f"{path}: expected 15 fields, got {len(row)}", row=no)
            try:
                counts[discretize([c.strip() for c in row])] += 1
            except ValueError as exc:
                raise DatasetError(f"{path}: {exc}", row=no) from None
    if not counts:
        raise DatasetError(f"{path}: empty dataset")
    return Dataset([(c, ADULT_DOMAINS[c]) for c in ADULT_COLUMNS], counts)
