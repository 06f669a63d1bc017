"""Independent brute-force oracles the implementation is checked against."""

import itertools

from scdebug.annotator import annotate
from scdebug.checker import insert_candidates, replay
from scdebug.model import Delete, Insert, Message, apply_edit


def edit_script_succeeds(sd, obj, chart, dt) -> bool:
    if not replay(sd, obj, chart, dt).accepted:
        return False
    try:
        _, conflicts = annotate(sd, dt)
    except Exception:
        return False
    return not conflicts


def brute_force_min_cost(sd, obj, chart, dt, bound):
    """Smallest edit count with a working script, enumerated exhaustively.

    Scripts are canonicalized as deletions of original positions followed by
    insertions; any minimal mixed script has an equivalent of this shape.
    """
    candidates = insert_candidates(dt, chart, sd, obj)

    def inserts(base, count):
        if count == 0:
            yield base
            return
        for pos in range(1, len(base.messages) + 2):
            for label, args, sender in candidates:
                edited = apply_edit(base, Insert(Message(pos, label, args, sender, obj), pos))
                yield from inserts(edited, count - 1)

    for total in range(bound + 1):
        for deletions in range(total + 1):
            insertions = total - deletions
            for combo in itertools.combinations(range(1, len(sd.messages) + 1), deletions):
                base = sd
                for pos in sorted(combo, reverse=True):
                    base = apply_edit(base, Delete(pos))
                for candidate_sd in inserts(base, insertions):
                    if edit_script_succeeds(candidate_sd, obj, chart, dt):
                        return total
    return None
