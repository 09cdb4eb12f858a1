import random

import pytest

from argmine.case_model import Case, CaseModel, Literal


def random_case_model(rng: random.Random) -> CaseModel:
    """Small random model: <= 4 attributes, <= 3 values each, <= 8 cases.

    Cases may assign only a subset of the attributes (partial scenarios
    happen in the legal examples too); duplicates collapse by weight.
    """
    n_attrs = rng.randint(1, 4)
    attrs = [f"a{i}" for i in range(n_attrs)]
    domains = {a: list(range(rng.randint(2, 3))) for a in attrs}
    n_cases = rng.randint(1, 8)
    seen = {}
    for _ in range(n_cases):
        lits = frozenset(
            Literal(a, rng.choice(domains[a]))
            for a in attrs
            if rng.random() < 0.8
        )
        if not lits:
            lits = frozenset([Literal(attrs[0], rng.choice(domains[attrs[0]]))])
        seen[lits] = seen.get(lits, 0) + rng.randint(1, 3)
    cases = tuple(Case(lits, w) for lits, w in seen.items())
    return CaseModel(cases)


@pytest.fixture
def rng():
    return random.Random(20240817)
