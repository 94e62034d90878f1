"""Per-user decoding of the broadcast answers.

Step 1 (groups containing the user): cancel cached contributions, subtract
the aligned interference residual obtained from database N, and invert the
full-rank column submatrix to get the user's missing block and that group's
extra bit.  Step 2 (groups excluding the user): strip the step-1 blocks
from database N's combination to expose the remaining extra bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .delivery import AnswerSet, CoefficientPlan
from .model import MessageLibrary, SubsetCatalog, SystemParams, UserCache


class MissingPrerequisiteError(KeyError):
    """Step 2 ran before the step-1 block it consumes was recovered."""


@dataclass(frozen=True)
class DecodeResult:
    user: int
    demand: int
    recovered: np.ndarray  # L bits of the demanded message, best effort
    success: bool
    step1_tags: tuple      # block tags recovered by inversion
    step1_groups: tuple    # groups whose extra bit came from step 1
    step2_groups: tuple
    first_mismatch: str | None = None


def _dot(vec, bits) -> int:
    return int(np.asarray(vec, dtype=np.uint8) @ np.asarray(bits, dtype=np.uint8)) & 1


def decode_step1(user: int, group: tuple[int, ...], plan: CoefficientPlan,
                 answers: AnswerSet, cache: UserCache,
                 params: SystemParams) -> tuple[np.ndarray, int]:
    """Recover block group\\{user} and the group's extra bit of the user's
    demanded message.  Requires user in group and the other members' blocks
    cached.
    """
    if user not in group:
        raise ValueError(f"user {user} not in group {group}")
    i = group.index(user)
    n = params.num_dbs
    gplan = plan.per_group[group]
    bits = answers.per_group[group]
    wanted = plan.demands[user - 1]
    other = 3 - wanted
    mats = {1: gplan.msg1_mats, 2: gplan.msg2_mats}
    db_n_bit = {1: bits[n - 1], 2: bits[n]}

    # Aligned interference residual: the other message's unknown block and
    # extra bit enter every row through this same combination.
    residual_other = db_n_bit[other]
    for j, member in enumerate(group):
        if j == i:
            continue
        tag = tuple(w for w in group if w != member)
        residual_other ^= _dot(mats[other][j][n - 1, :n - 1], cache.block(other, tag))

    rhs = np.zeros(n, dtype=np.uint8)
    for r in range(n - 1):
        acc = bits[r]
        for j, member in enumerate(group):
            if j == i:
                continue
            tag = tuple(w for w in group if w != member)
            acc ^= _dot(mats[1][j][r, :n - 1], cache.block(1, tag))
            acc ^= _dot(mats[2][j][r, :n - 1], cache.block(2, tag))
        rhs[r] = acc ^ residual_other
    acc = db_n_bit[wanted]
    for j, member in enumerate(group):
        if j == i:
            continue
        tag = tuple(w for w in group if w != member)
        acc ^= _dot(mats[wanted][j][n - 1, :n - 1], cache.block(wanted, tag))
    rhs[n - 1] = acc

    x = gf2.solve_square(mats[wanted][i], rhs)
    return x[:n - 1], int(x[n - 1])


def decode_step2(user: int, group: tuple[int, ...], plan: CoefficientPlan,
                 answers: AnswerSet, step1_blocks: dict,
                 params: SystemParams) -> int:
    """Recover the extra bit of a group not containing the user from
    database N's combination, using blocks already decoded in step 1.
    """
    if user in group:
        raise ValueError(f"user {user} is in group {group}; step 1 applies")
    n = params.num_dbs
    gplan = plan.per_group[group]
    wanted = plan.demands[user - 1]
    mats = gplan.msg1_mats if wanted == 1 else gplan.msg2_mats
    bit = answers.per_group[group][n - 1 if wanted == 1 else n]
    for j, member in enumerate(group):
        tag = tuple(w for w in group if w != member)
        if tag not in step1_blocks:
            raise MissingPrerequisiteError(f"block {tag} not yet recovered for user {user}")
        bit ^= _dot(mats[j][n - 1, :n - 1], step1_blocks[tag])
    return int(bit)


def decode_all(params: SystemParams, plan: CoefficientPlan, answers: AnswerSet,
               caches: list[UserCache], lib: MessageLibrary) -> list[DecodeResult]:
    """Run both steps for every user and assemble the demanded messages.

    lib is the ground-truth reference for the success flag only; the
    decoding path never reads it.
    """
    catalog = lib.catalog
    results = []
    for cache in caches:
        user = cache.user
        wanted = plan.demands[user - 1]
        step1_blocks: dict = {}
        extras: dict = {}
        step1_groups, step2_groups = [], []
        for group in catalog.groups:
            if user in group:
                block, extra = decode_step1(user, group, plan, answers, cache, params)
                step1_blocks[tuple(w for w in group if w != user)] = block
                extras[group] = extra
                step1_groups.append(group)
        for group in catalog.groups:
            if user not in group:
                extras[group] = decode_step2(user, group, plan, answers,
                                             step1_blocks, params)
                step2_groups.append(group)

        parts = []
        for tag in catalog.tags:
            parts.append(cache.block(wanted, tag) if user in tag else step1_blocks[tag])
        parts.append(np.array([extras[g] for g in catalog.groups], dtype=np.uint8))
        recovered = np.concatenate(parts)

        truth = lib.message(wanted)
        success = bool(np.array_equal(recovered, truth))
        mismatch = None
        if not success:
            for tag in catalog.tags:
                if not np.array_equal(
                        recovered[catalog.tag_index[tag] * params.block_len:
                                  (catalog.tag_index[tag] + 1) * params.block_len],
                        lib.block(wanted, tag)):
                    mismatch = f"block {tag}"
                    break
            if mismatch is None:
                for group in catalog.groups:
                    if extras[group] != lib.extra(wanted, group):
                        mismatch = f"extra bit {group}"
                        break
        results.append(DecodeResult(
            user, wanted, recovered, success,
            tuple(sorted(step1_blocks)), tuple(step1_groups), tuple(step2_groups),
            mismatch))
    return results
