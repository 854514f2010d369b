"""Synthetic benchmark inputs: error injection, name ambiguities, query generation.

Corruption is exact-count and fully seeded: a shuffled prefix of eligible
positions is modified, so the number of touched cells is exactly
floor(rate * eligible) and identical plans reproduce identical outputs.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass

from entprof.model import NUMERIC, Query, ValidationError


@dataclass(frozen=True)
class CorruptionPlan:
    error_rate: float = 0.0
    ambiguity_rate: float = 0.0
    seed: int = 0
    name_attribute: int = 0

    def __post_init__(self):
        for rate in (self.error_rate, self.ambiguity_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValidationError(f"rate must be within [0, 1], got {rate!r}")


def _corrupt_number(original, rng):
    # Uniform draw in [0.5x, 1.5x], redrawn until it differs from x.
    if original == 0:
        low, high = -0.5, 0.5
    else:
        low, high = sorted((0.5 * original, 1.5 * original))
    while True:
        draw = rng.uniform(low, high)
        if draw != original:
            return draw


def _corrupt_text(original, pool, rng):
    candidates = [value for value in pool if value != original]
    if candidates:
        return rng.choice(candidates)
    # No other entity offers a differing value: scramble the characters.
    chars = list(original)
    for _ in range(10):
        rng.shuffle(chars)
        scrambled = "".join(chars)
        if scrambled != original:
            return scrambled
    return original + "~"


def inject_errors(dataset, plan):
    """Replace an exact fraction of non-missing cells with erroneous values.

    Numeric cells draw uniformly from [0.5x, 1.5x] (excluding the original);
    text cells take a randomly chosen other entity's value for the same
    attribute. The input dataset is not modified.
    """
    corrupted = copy.deepcopy(dataset)
    eligible = [
        (record_index, attribute)
        for record_index, record in enumerate(corrupted.records)
        for attribute in range(len(corrupted.schema))
        if record.values[attribute] is not None
    ]
    count = int(plan.error_rate * len(eligible))
    rng = random.Random(plan.seed)
    rng.shuffle(eligible)

    # Distinct text values per attribute, keyed away from each record's entity.
    pools = {}
    for attribute, kind in enumerate(corrupted.schema.kinds):
        if kind == NUMERIC:
            continue
        pool = {}
        for record in dataset.records:
            value = record.values[attribute]
            if value is None:
                continue
            entity = record.entity_id if record.entity_id is not None else record.record_id
            pool.setdefault(value, entity)
        pools[attribute] = pool

    for record_index, attribute in eligible[:count]:
        record = corrupted.records[record_index]
        original = record.values[attribute]
        if corrupted.schema.kinds[attribute] == NUMERIC:
            record.values[attribute] = _corrupt_number(original, rng)
        else:
            entity = record.entity_id if record.entity_id is not None else record.record_id
            pool = [v for v, owner in pools[attribute].items() if owner != entity]
            record.values[attribute] = _corrupt_text(original, pool, rng)
    return corrupted


ABBREVIATE = "abbreviate"
DROP_FIRST = "drop_first"
DROP_LAST = "drop_last"
_AMBIGUITY_TRANSFORMS = (ABBREVIATE, DROP_FIRST, DROP_LAST)


def _ambiguate(name, rng):
    tokens = name.split()
    if len(tokens) <= 1:
        transform = ABBREVIATE
    else:
        transform = rng.choice(_AMBIGUITY_TRANSFORMS)
    if transform == ABBREVIATE:
        return " ".join([tokens[0][0] + "."] + tokens[1:])
    if transform == DROP_FIRST:
        return " ".join(tokens[1:])
    return " ".join(tokens[:-1])


def inject_ambiguities(dataset, plan):
    """Rewrite an exact fraction of name cells with one of three name transforms.

    Chosen uniformly per affected record: abbreviate the first token to an
    initial, drop the first token, or drop the last token. Single-token
    names can only be abbreviated. Records whose name cell is missing or
    non-text are not eligible.
    """
    corrupted = copy.deepcopy(dataset)
    attribute = plan.name_attribute
    eligible = [
        record_index
        for record_index, record in enumerate(corrupted.records)
        if isinstance(record.values[attribute], str) and record.values[attribute]
    ]
    count = int(plan.ambiguity_rate * len(eligible))
    rng = random.Random(plan.seed)
    rng.shuffle(eligible)
    for record_index in eligible[:count]:
        record = corrupted.records[record_index]
        record.values[attribute] = _ambiguate(record.values[attribute], rng)
    return corrupted


def make_queries(entities, filled_count, seed, schema):
    """One query per ground-truth entity with a seeded subset of cells blanked.

    ``entities`` maps entity ids to full value tuples; each query keeps
    ``filled_count`` cells and blanks the rest. Query ids are q1, q2, ... in
    the entities' iteration order.
    """
    width = len(schema)
    if not 1 <= filled_count < width:
        raise ValidationError(
            f"filled_count must be in [1, {width - 1}], got {filled_count!r}"
        )
    rng = random.Random(seed)
    queries = []
    for position, (entity_id, values) in enumerate(entities.items(), 1):
        if len(values) != width:
            raise ValidationError(f"entity {entity_id!r} has {len(values)} values, expected {width}")
        blanked = set(rng.sample(range(width), width - filled_count))
        query_values = [None if i in blanked else values[i] for i in range(width)]
        if all(v is None for v in query_values):
            raise ValidationError(f"entity {entity_id!r} yields an all-missing query")
        queries.append(Query(f"q{position}", query_values, entity_id))
    return queries
