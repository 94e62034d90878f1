"""Demand-dependent coefficient design, per-database queries, and answers.

For every size-(t+1) user group the databases jointly emit N+1 linear
combinations of that group's blocks and extra bits: one from each of the
first N-1 databases and two from the last.  Per column block, the side a
user wants is a random row permutation of the alignment matrix (always
invertible) while the interfering side repeats a single random alphabet
vector on all rows, so one subtraction cancels it everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import gf2
from .model import MessageLibrary, SubsetCatalog, SystemParams

COEFF_STREAM = 1  # spawn-key namespace; 0 is reserved for message bits


def validate_demands(params: SystemParams, demands) -> tuple[int, ...]:
    """Check a demand vector: one entry per user, each 1 or 2."""
    theta = tuple(int(d) for d in demands)
    if len(theta) != params.num_users:
        raise ValueError(f"need {params.num_users} demands, got {len(theta)}")
    if any(d not in (1, 2) for d in theta):
        raise ValueError(f"demands must be 1 or 2, got {theta}")
    return theta


def coefficient_alphabet(num_dbs: int) -> tuple[tuple[int, ...], ...]:
    """The N coefficient vectors of length N-1 visible to any one database:
    rows of the alignment matrix with their trailing 1 removed
    (e_1, ..., e_{N-1}, zero).
    """
    y = gf2.build_alignment_matrix(num_dbs)
    return tuple(tuple(int(b) for b in row[:-1]) for row in y)


@dataclass(frozen=True)
class GroupPlan:
    """Coefficients for one delivery group.

    msg1_mats[i] / msg2_mats[i] are the N x N column submatrices tied to
    block group\\{u_i} of each message: rows 1..N-1 feed databases 1..N-1,
    the last row feeds database N, and the last column is the constant 1
    multiplying the extra bit.
    """

    group: tuple[int, ...]
    wants_msg1: tuple[int, ...]  # 0-based column positions whose user demands message 1
    wants_msg2: tuple[int, ...]
    msg1_mats: tuple[np.ndarray, ...]
    msg2_mats: tuple[np.ndarray, ...]
    aligned: tuple[tuple[int, ...], ...]  # per column, the repeated interference vector
    perms: tuple[tuple[int, ...], ...]    # per column, the row permutation on the wanted side


@dataclass(frozen=True)
class CoefficientPlan:
    params: SystemParams
    demands: tuple[int, ...]
    seed: int
    per_group: dict  # group tuple -> GroupPlan, in lexicographic group order


@dataclass(frozen=True)
class QuerySet:
    """What one database sees: per group, per column block, the pair of
    coefficient vectors (message-1 side, message-2 side) in its own rows.
    Constant matrix entries are protocol structure, not query payload.
    """

    db: int
    per_group: dict  # group -> tuple over columns of (msg1 vec, msg2 vec)


@dataclass(frozen=True)
class AnswerSet:
    """Broadcast bits: per group, N-1 single combinations then the two
    combinations from database N.
    """

    params: SystemParams
    per_group: dict  # group -> tuple of N+1 bits

    @property
    def total_bits(self) -> int:
        return sum(len(v) for v in self.per_group.values())


def _group_key(group: tuple[int, ...]) -> int:
    # Stable across catalogs: adding users or groups never moves a stream.
    return sum(1 << (u - 1) for u in group)


def design_coefficients(params: SystemParams, demands, seed: int,
                        catalog: SubsetCatalog | None = None) -> CoefficientPlan:
    """Draw the per-group coefficient plan from a seeded generator.

    Every (group, column) pair gets its own derived stream, so draws are
    independent across columns and reproducible for a given seed.
    """
    theta = validate_demands(params, demands)
    catalog = catalog or SubsetCatalog.build(params)
    n = params.num_dbs
    y = gf2.build_alignment_matrix(n)
    alphabet = coefficient_alphabet(n)

    per_group = {}
    for group in catalog.groups:
        mats1, mats2, aligned, perms = [], [], [], []
        wants1, wants2 = [], []
        for i, user in enumerate(group):
            rng = np.random.default_rng(
                np.random.SeedSequence(seed, spawn_key=(COEFF_STREAM, _group_key(group), i)))
            a_idx = int(rng.integers(n))
            perm = tuple(int(p) for p in rng.permutation(n))
            repeated = np.ones((n, n), dtype=np.uint8)
            repeated[:, :-1] = alphabet[a_idx]
            permuted = gf2.permute_rows(y, perm)
            if theta[user - 1] == 1:
                wants1.append(i)
                mats1.append(permuted)
                mats2.append(gf2.frozen(repeated))
            else:
                wants2.append(i)
                mats2.append(permuted)
                mats1.append(gf2.frozen(repeated))
            aligned.append(alphabet[a_idx])
            perms.append(perm)
        per_group[group] = GroupPlan(
            group, tuple(wants1), tuple(wants2),
            tuple(mats1), tuple(mats2), tuple(aligned), tuple(perms))
    return CoefficientPlan(params, theta, seed, per_group)


def assemble_matrix(plan: GroupPlan, params: SystemParams) -> np.ndarray:
    """The (N+1) x 2((t+1)(N-1)+1) answer matrix for one group.

    Column layout per message: one (N-1)-wide slice per column block i
    (block group\\{u_i}), then the extra-bit column.  Rows: databases
    1..N-1, then database N's two combinations (message 1 only, then
    message 2 only).
    """
    n = params.num_dbs
    cols_per_msg = (params.t + 1) * (n - 1) + 1
    m = np.zeros((n + 1, 2 * cols_per_msg), dtype=np.uint8)
    for i in range(params.t + 1):
        s = i * (n - 1)
        m[:n - 1, s:s + n - 1] = plan.msg1_mats[i][:n - 1, :n - 1]
        m[n - 1, s:s + n - 1] = plan.msg1_mats[i][n - 1, :n - 1]
        m[:n - 1, cols_per_msg + s:cols_per_msg + s + n - 1] = plan.msg2_mats[i][:n - 1, :n - 1]
        m[n, cols_per_msg + s:cols_per_msg + s + n - 1] = plan.msg2_mats[i][n - 1, :n - 1]
    m[:n - 1, cols_per_msg - 1] = 1
    m[n - 1, cols_per_msg - 1] = 1
    m[:n - 1, 2 * cols_per_msg - 1] = 1
    m[n, 2 * cols_per_msg - 1] = 1
    return gf2.frozen(m)


def group_bit_vector(lib: MessageLibrary, group: tuple[int, ...]) -> np.ndarray:
    """The message bits one group's answers combine, in matrix column order."""
    parts = []
    for k in (1, 2):
        for u in group:
            tag = tuple(w for w in group if w != u)
            parts.append(lib.block(k, tag))
        parts.append(np.array([lib.extra(k, group)], dtype=np.uint8))
    return np.concatenate(parts)


def compute_answers(plan: CoefficientPlan, lib: MessageLibrary,
                    params: SystemParams) -> AnswerSet:
    """Evaluate every group's answer matrix against the library bits."""
    per_group = {}
    for group, gplan in plan.per_group.items():
        bits = gf2.mat_vec(assemble_matrix(gplan, params), group_bit_vector(lib, group))
        per_group[group] = tuple(int(b) for b in bits)
    return AnswerSet(params, per_group)


def extract_queries(plan: CoefficientPlan, params: SystemParams) -> list[QuerySet]:
    """Partition the plan into the N per-database views.

    Database n <= N-1 sees row n of every column submatrix; database N sees
    the last rows.  The union of all query sets reconstructs the plan.
    """
    n = params.num_dbs
    out = []
    for db in range(1, n + 1):
        row = db - 1 if db < n else n - 1
        per_group = {}
        for group, gplan in plan.per_group.items():
            pairs = []
            for i in range(params.t + 1):
                m1 = gplan.msg1_mats[i][row, :n - 1]
                m2 = gplan.msg2_mats[i][row, :n - 1]
                pairs.append((tuple(int(b) for b in m1), tuple(int(b) for b in m2)))
            per_group[group] = tuple(pairs)
        out.append(QuerySet(db, per_group))
    return out


def achieved_load(params: SystemParams) -> Fraction:
    """Download of the aligned delivery per message bit:
    C(K_u,t+1)(N+1) / L, before any comparison with the naive baseline.
    """
    d = comb(params.num_users, params.t + 1) * (params.num_dbs + 1)
    return Fraction(d, params.message_len)


def _vec_str(vec) -> str:
    return "".join(str(int(b)) for b in vec)


def render_queries(queries: list[QuerySet], params: SystemParams) -> str:
    """Canonical text form of the per-database queries: one record per group
    in lexicographic order, coefficient vectors as 0/1 strings (positions
    ascending).
    """
    lines = [f"params users={params.num_users} dbs={params.num_dbs} t={params.t}"]
    for qs in queries:
        lines.append(f"[queries db={qs.db}]")
        for group, pairs in qs.per_group.items():
            m1 = ",".join(_vec_str(p[0]) for p in pairs)
            m2 = ",".join(_vec_str(p[1]) for p in pairs)
            lines.append(f"group={','.join(map(str, group))} msg1={m1} msg2={m2}")
    return "\n".join(lines) + "\n"


def render_answers(answers: AnswerSet) -> str:
    """Canonical text form of the broadcast bits, one record per group."""
    lines = ["[answers]"]
    for group, bits in answers.per_group.items():
        lines.append(f"group={','.join(map(str, group))} bits={_vec_str(bits)}")
    return "\n".join(lines) + "\n"
