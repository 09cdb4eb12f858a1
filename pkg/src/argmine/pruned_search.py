"""Systematic search for presumptively valid arguments with coherence pruning.

The learner enumerates candidate premises level by level for each
conclusion literal.  Coherence is the pruning criterion: an incoherent
(premise, conclusion) pair can have no coherent extension of its premise,
so the whole branch is cut.  Surviving candidates are classified as
presumptively valid or conclusive, filtered for relevance, merged by
premise, and annotated with recursively mined exceptions.

Cases and premises are compacted to integer bitmasks over the model's
observed literals, which keeps the coherence and validity scans cheap
even on a few hundred cases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Iterable, Mapping, Sequence

from .case_model import (
    COHERENT,
    CONCLUSIVE,
    PRESUMPTIVELY_VALID,
    Argument,
    CaseModel,
    Literal,
    argument_from_json,
    argument_support,
    argument_to_json,
    is_consistent,
    is_presumptively_valid,
    literal_set_key,
)
from .errors import InputError, InvariantError


@dataclass(frozen=True)
class SearchConfig:
    """Hyperparameters of the pruned search.

    ``max_premise_size`` caps the number of premise literals;
    ``exception_depth`` caps the nesting of exceptions on exceptions.
    ``target_attributes`` restricts conclusion literals to the given
    attributes (None = all attributes).
    """

    max_premise_size: int = 2
    exception_depth: int = 5
    target_attributes: tuple[str, ...] | None = None
    universal_ties: bool = False

    def __post_init__(self):
        if self.max_premise_size < 1:
            raise InputError(f"max_premise_size must be >= 1, got {self.max_premise_size}")
        if self.exception_depth < 0:
            raise InputError(f"exception_depth must be >= 0, got {self.exception_depth}")

    def to_json(self) -> dict:
        return {
            "max_premise_size": self.max_premise_size,
            "exception_depth": self.exception_depth,
            "target_attributes": list(self.target_attributes) if self.target_attributes else None,
            "universal_ties": self.universal_ties,
        }


@dataclass(frozen=True)
class Theory:
    """Relevance-filtered, merged, exception-annotated argument set."""

    arguments: tuple[Argument, ...]
    config: SearchConfig
    model_summary: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "arguments": [argument_to_json(a) for a in self.arguments],
            "config": self.config.to_json(),
            "model_summary": self.model_summary,
        }

    @staticmethod
    def from_json(data: Mapping[str, Any]) -> "Theory":
        cfg = data.get("config", {})
        ta = cfg.get("target_attributes")
        config = SearchConfig(
            max_premise_size=cfg.get("max_premise_size", 2),
            exception_depth=cfg.get("exception_depth", 5),
            target_attributes=tuple(ta) if ta else None,
            universal_ties=cfg.get("universal_ties", False),
        )
        return Theory(
            arguments=tuple(argument_from_json(a) for a in data["arguments"]),
            config=config,
            model_summary=dict(data.get("model_summary", {})),
        )


class _Index:
    """Bitmask view of a case model: literals become bit positions."""

    def __init__(self, model: CaseModel):
        self.model = model
        self.literals = model.all_literals()
        self.bit = {lit: 1 << i for i, lit in enumerate(self.literals)}
        self.attr_ids: dict[str, int] = {}
        for lit in self.literals:
            self.attr_ids.setdefault(lit.attribute, len(self.attr_ids))
        self.attr_bit = {lit: 1 << self.attr_ids[lit.attribute] for lit in self.literals}
        # cases ordered by descending weight (model guarantees the order)
        self.case_masks = [self._mask(c.literals) for c in model.cases]
        self.case_weights = [c.weight for c in model.cases]

    def _mask(self, lits: Iterable[Literal]) -> int:
        return sum(self.bit[lit] for lit in lits)

    def mask_of(self, lits: Iterable[Literal]) -> int | None:
        """Bitmask of a literal set, or None if a literal is unobserved."""
        m = 0
        for lit in lits:
            b = self.bit.get(lit)
            if b is None:
                return None
            m |= b
        return m

    def literals_of(self, mask: int) -> frozenset[Literal]:
        return frozenset(lit for lit in self.literals if self.bit[lit] & mask)

    def support_sum(self, mask: int) -> int:
        """Total weight of the cases containing every literal in the mask."""
        return sum(
            w for cm, w in zip(self.case_masks, self.case_weights) if cm & mask == mask
        )

    def scan(self, pmask: int, cmask: int, universal: bool = False):
        """Classify (premise, conclusion) in one pass over the cases.

        Returns (coherent, presumptively_valid, conclusive, support) where
        support is the weight of the heaviest case containing both sides.
        """
        full = pmask | cmask
        top_w = None
        pv_any = False
        pv_all = True
        coherent = False
        all_contain = True
        support = None
        for cm, w in zip(self.case_masks, self.case_weights):
            if cm & pmask == pmask:
                holds = cm & full == full
                if top_w is None:
                    top_w = w
                if holds:
                    coherent = True
                    if support is None:
                        support = w
                else:
                    all_contain = False
                if w == top_w:
                    if holds:
                        pv_any = True
                    else:
                        pv_all = False
        if top_w is None:
            return False, False, False, None
        pv = (pv_all if universal else pv_any)
        return coherent, pv, coherent and all_contain, support


def join_premises(frontier: Iterable[frozenset[Literal]]) -> set[frozenset[Literal]]:
    """Combine same-size coherent premises differing in exactly two literals.

    The union of such a pair has one more literal and shares most of its
    subsets with premises already known coherent, which makes it a likely
    candidate; unions putting two values on one attribute are dropped.
    """
    frontier = list(frontier)
    out: set[frozenset[Literal]] = set()
    for a, b in combinations(frontier, 2):
        diff = a ^ b
        if len(diff) != 2:
            continue
        l1, l2 = diff
        if l1.attribute == l2.attribute:
            continue
        out.add(a | b)
    return out


def _status(pv: bool, conclusive: bool) -> str:
    if conclusive:
        return CONCLUSIVE
    return PRESUMPTIVELY_VALID if pv else COHERENT


def _search_one_conclusion(index: _Index, concl: Literal, max_size: int, universal: bool):
    """All coherent arguments for one conclusion literal, with statuses.

    Level-wise growth over coherent premises only; every premise whose
    (premise, conclusion) pair is incoherent is pruned together with all
    of its supersets, which is safe because coherence is anti-monotone in
    the premise.  Single-literal extensions of the coherent frontier
    generate every candidate the two-literal join would (each join result
    extends one of its own coherent subsets), so the join is subsumed.
    """
    cbit = index.bit[concl]
    cattr = index.attr_bit[concl]
    coh, pv, conclusive, support = index.scan(0, cbit, universal)
    if not coh:
        return []
    found = [(0, _status(pv, conclusive), support)]
    ext_lits = [
        (index.bit[lit], index.attr_bit[lit])
        for lit in index.literals
        if index.attr_bit[lit] != cattr
    ]
    frontier: list[tuple[int, int]] = [(0, 0)]  # (premise mask, attribute mask)
    for _ in range(max_size):
        candidates: dict[int, int] = {}
        for pmask, amask in frontier:
            for lbit, labit in ext_lits:
                if labit & amask:
                    continue
                candidates.setdefault(pmask | lbit, amask | labit)
        next_frontier: list[tuple[int, int]] = []
        for pmask, amask in candidates.items():
            coh, pv, conclusive, support = index.scan(pmask, cbit, universal)
            if not coh:
                continue
            next_frontier.append((pmask, amask))
            found.append((pmask, _status(pv, conclusive), support))
        frontier = next_frontier
        if not frontier:
            break
    return found


def search_arguments(
    model: CaseModel, config: SearchConfig, include_coherent: bool = False
) -> list[Argument]:
    """The raw (pre-filter) search result, deterministically sorted.

    By default: every presumptively valid argument with a single-literal
    conclusion and at most ``max_premise_size`` premise literals, marked
    conclusive where the stronger notion holds.  ``include_coherent``
    additionally emits the arguments that are merely coherent.
    """
    index = _Index(model)
    conclusions = index.literals
    if config.target_attributes is not None:
        wanted = set(config.target_attributes)
        conclusions = [lit for lit in conclusions if lit.attribute in wanted]
    out: list[Argument] = []
    for concl in conclusions:
        for pmask, status, support in _search_one_conclusion(
            index, concl, config.max_premise_size, config.universal_ties
        ):
            if status == COHERENT and not include_coherent:
                continue
            out.append(
                Argument(
                    premise=index.literals_of(pmask),
                    conclusion=frozenset([concl]),
                    status=status,
                    weight=support,
                )
            )
    out.sort(key=Argument.sort_key)
    return out


def _single_conclusion(arg: Argument) -> Literal:
    if len(arg.conclusion) != 1:
        raise InputError(f"expected a single-literal conclusion, got {arg!r}")
    return next(iter(arg.conclusion))


def filter_relevant(args: Sequence[Argument]) -> list[Argument]:
    """Drop arguments that are shadowed by a less specific counterpart.

    An argument stays if no other argument has the same conclusion literal
    and a proper subset of its premise, or if it is an exception to a
    retained argument (its premise properly extends the retained one's and
    its conclusion conflicts with it); the exception clause closes under a
    fixpoint so that exceptions of exceptions survive too.
    """
    pool = list(args)
    keyed = {(a.premise, _single_conclusion(a)) for a in pool}

    def has_less_specific(a: Argument) -> bool:
        c = _single_conclusion(a)
        lits = sorted(a.premise, key=Literal.sort_key)
        for size in range(len(lits)):
            for sub in combinations(lits, size):
                if (frozenset(sub), c) in keyed:
                    return True
        return False

    retained = [a for a in pool if not has_less_specific(a)]
    retained_set = {(a.premise, _single_conclusion(a)) for a in retained}
    queue = list(retained)
    while queue:
        parent = queue.pop()
        pc = _single_conclusion(parent)
        for cand in pool:
            key = (cand.premise, _single_conclusion(cand))
            if key in retained_set:
                continue
            cc = _single_conclusion(cand)
            if cc.conflicts(pc) and cand.premise > parent.premise:
                retained_set.add(key)
                retained.append(cand)
                queue.append(cand)
    retained.sort(key=Argument.sort_key)
    return retained


def merge_same_premise(args: Sequence[Argument]) -> list[Argument]:
    """Merge same-premise arguments into one with the conclusion union.

    Conclusions must be single literals; the merged union is asserted to
    be internally consistent (same-premise presumptively valid conclusions
    are expected to share a maximal case) and a violation halts with a
    diagnostic rather than silently producing a contradictory argument.
    The merged argument is conclusive only if every member was.
    """
    groups: dict[frozenset[Literal], list[Argument]] = {}
    order: list[frozenset[Literal]] = []
    for a in args:
        _single_conclusion(a)
        if a.premise not in groups:
            order.append(a.premise)
        groups.setdefault(a.premise, []).append(a)
    out = []
    for premise in order:
        members = groups[premise]
        conclusion = frozenset(lit for m in members for lit in m.conclusion)
        if not is_consistent(conclusion):
            raise InvariantError(
                "same-premise arguments with conflicting conclusions: "
                f"premise={sorted(map(repr, premise))} "
                f"conclusions={sorted(map(repr, conclusion))}"
            )
        status = CONCLUSIVE if all(m.status == CONCLUSIVE for m in members) else PRESUMPTIVELY_VALID
        exceptions = tuple(e for m in members for e in m.exceptions)
        weights = [m.weight for m in members if m.weight is not None]
        out.append(
            Argument(
                premise=premise,
                conclusion=conclusion,
                status=status,
                exceptions=exceptions,
                weight=min(weights) if len(weights) == len(members) else None,
            )
        )
    return out


def find_exceptions(
    model: CaseModel,
    arg: Argument,
    remaining_depth: int,
    max_premise_size: int | None = None,
    _index: _Index | None = None,
) -> list[Argument]:
    """Presumptively valid arguments that overrule ``arg``.

    An exception's premise properly extends the argument's premise and its
    conclusion conflicts with the argument's conclusion on one attribute;
    each exception recursively carries its own exceptions (an exception to
    an exception reinstates the original conclusion attribute) until the
    depth budget runs out.  Premises beyond ``max_premise_size`` literals
    are not explored (None = no cap).

    Only decisive overrulings qualify: the conflicting value must carry
    more total case weight under the extended premise than the parent's
    value does, otherwise the more specific argument has not overruled
    anything and is not attached as an exception.
    """
    if remaining_depth < 0:
        raise InputError("remaining_depth must be >= 0")
    if arg.status == CONCLUSIVE:
        raise InputError("a conclusive argument admits no exceptions")
    if remaining_depth == 0:
        return []
    index = _index if _index is not None else _Index(model)
    cap = max_premise_size if max_premise_size is not None else len(index.attr_ids)

    base_mask = index.mask_of(arg.premise)
    if base_mask is None:
        return []  # premise uses literals outside the model: nothing to find
    pattrs = 0
    for lit in arg.premise:
        pattrs |= index.attr_bit[lit]

    out: list[Argument] = []
    for parent_lit in sorted(arg.conclusion, key=Literal.sort_key):
        parent_bit = index.bit[parent_lit]
        conflict_lits = [
            lit
            for lit in index.literals
            if lit.attribute == parent_lit.attribute and lit.value != parent_lit.value
        ]
        for concl in conflict_lits:
            cbit = index.bit[concl]
            cattr = index.attr_bit[concl]
            coh, _, _, _ = index.scan(base_mask, cbit)
            if not coh:
                continue  # no coherent extension can exist either
            ext_lits = [
                (index.bit[lit], index.attr_bit[lit])
                for lit in index.literals
                if not (index.attr_bit[lit] & (pattrs | cattr))
            ]
            frontier = [(base_mask, pattrs)]
            for _ in range(len(arg.premise), cap):
                candidates: dict[int, int] = {}
                for pmask, amask in frontier:
                    for lbit, labit in ext_lits:
                        if labit & amask:
                            continue
                        candidates.setdefault(pmask | lbit, amask | labit)
                next_frontier = []
                for pmask, amask in candidates.items():
                    coh, pv, is_concl, support = index.scan(pmask, cbit)
                    if not coh:
                        continue
                    next_frontier.append((pmask, amask))
                    if pv:
                        # only a decisive overruling counts: under the
                        # extended premise the conflicting value must carry
                        # more case weight than the parent's value, else
                        # nothing has been overruled
                        if index.support_sum(pmask | cbit) <= index.support_sum(
                            pmask | parent_bit
                        ):
                            continue
                        exc = Argument(
                            premise=index.literals_of(pmask),
                            conclusion=frozenset([concl]),
                            status=CONCLUSIVE if is_concl else PRESUMPTIVELY_VALID,
                            weight=support,
                        )
                        if exc.status != CONCLUSIVE:
                            nested = find_exceptions(
                                model,
                                exc,
                                remaining_depth - 1,
                                max_premise_size=max_premise_size,
                                _index=index,
                            )
                            if nested:
                                exc = Argument(
                                    premise=exc.premise,
                                    conclusion=exc.conclusion,
                                    status=exc.status,
                                    exceptions=tuple(nested),
                                    weight=exc.weight,
                                )
                        out.append(exc)
                frontier = next_frontier
                if not frontier:
                    break
    out.sort(key=Argument.sort_key)
    return out


def _attach_exceptions(model: CaseModel, index: _Index, arg: Argument, config: SearchConfig) -> Argument:
    if arg.status == CONCLUSIVE or config.exception_depth == 0:
        return arg
    excs = find_exceptions(
        model,
        arg,
        config.exception_depth,
        max_premise_size=config.max_premise_size,
        _index=index,
    )
    if not excs:
        return arg
    return Argument(
        premise=arg.premise,
        conclusion=arg.conclusion,
        status=arg.status,
        exceptions=tuple(excs),
        weight=arg.weight,
    )


def _merge_groups(model: CaseModel, args: list[Argument], universal: bool) -> list[Argument]:
    """Merge same-premise arguments, verifying joint presumptive validity.

    Weight ties in the model can make two conclusions individually valid
    but jointly invalid (or even mutually conflicting); such literals are
    dropped deterministically, keeping the first consistent jointly-valid
    group in conclusion sort order.
    """
    groups: dict[frozenset[Literal], list[Argument]] = {}
    order: list[frozenset[Literal]] = []
    for a in args:
        if a.premise not in groups:
            order.append(a.premise)
        groups.setdefault(a.premise, []).append(a)
    merged = []
    for premise in order:
        members = sorted(groups[premise], key=Argument.sort_key)
        kept: list[Argument] = []
        acc: frozenset[Literal] = frozenset()
        for m in members:
            trial = acc | m.conclusion
            if not is_consistent(trial):
                continue
            probe = Argument(premise=premise, conclusion=trial)
            if not is_presumptively_valid(model, probe, universal_ties=universal):
                continue
            kept.append(m)
            acc = trial
        if not kept:
            continue
        for m in merge_same_premise(kept):
            merged.append(
                Argument(
                    premise=m.premise,
                    conclusion=m.conclusion,
                    status=m.status,
                    exceptions=m.exceptions,
                    weight=argument_support(model, m),
                )
            )
    return merged


def learn_pruned(model: CaseModel, config: SearchConfig | None = None) -> Theory:
    """Full pipeline: search, relevance filter, exception mining, merge."""
    if not model.cases:
        raise InputError("cannot learn from an empty case model")
    if config is None:
        config = SearchConfig()
    index = _Index(model)
    pool = search_arguments(model, config)
    # Top level = arguments with no less specific counterpart; arguments
    # relevant only as exceptions live inside their parents' trees.
    keyed = {(a.premise, _single_conclusion(a)) for a in pool}
    top = [a for a in pool if not _shadowed(a, keyed)]
    top = [_attach_exceptions(model, index, a, config) for a in top]
    merged = _merge_groups(model, top, config.universal_ties)
    for arg in merged:
        if not is_presumptively_valid(model, arg, universal_ties=config.universal_ties):
            raise InvariantError(f"merged argument lost validity: {arg!r}")
    merged.sort(key=Argument.sort_key)
    summary = {
        "attributes": {a: list(vs) for a, vs in model.attributes.items()},
        "case_count": len(model.cases),
    }
    return Theory(arguments=tuple(merged), config=config, model_summary=summary)


def _shadowed(arg: Argument, keyed: set) -> bool:
    """True iff the pool holds the same conclusion under a smaller premise."""
    c = _single_conclusion(arg)
    lits = sorted(arg.premise, key=Literal.sort_key)
    for size in range(len(lits)):
        for sub in combinations(lits, size):
            if (frozenset(sub), c) in keyed:
                return True
    return False
