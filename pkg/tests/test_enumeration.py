import itertools
import math

import numpy as np
import pytest

from mamsap import (
    BoundarySet,
    Code,
    EnumerationSizeError,
    Pair,
    TrialDesign,
    TrialLayout,
    build_all_outcomes,
    build_lfc_power,
    build_multi_relevant,
    code_interval,
    terminal_profile,
)

PAIRS3 = [Pair(1, 2), Pair(1, 3), Pair(2, 3)]


def _signature(config, design):
    """Label-free canonical form: the z-interval of every (pair, stage) cell."""
    u = design.boundaries.outer
    us = design.boundaries.inner
    cells = []
    for pair in sorted(config.codes):
        for j, code in enumerate(config.codes[pair]):
            cells.append((pair, j + 1, code_interval(code, u[j], us[j])))
    return tuple(cells)


def _classify(z, u, us):
    """Vectorized region code for statistic values ``z`` at one stage."""
    z = np.asarray(z)
    if us <= 0:
        inner = Code.A8
        cuts, codes = [-u, u], [Code.A1, inner, Code.A5]
    elif us >= u:
        cuts, codes = [-u, u], [Code.A1, Code.A3, Code.A5]
    else:
        cuts = [-u, -us, us, u]
        codes = [Code.A1, Code.A2, Code.A3, Code.A4, Code.A5]
    idx = np.searchsorted(cuts, z)
    return np.asarray(codes, dtype=np.int8)[idx]


def _brute_force_outcomes(design):
    """Independent enumeration for K=3, J=2 via a dense grid over the
    constrained statistic space (z13 = z12 + z23 at every stage, equal
    allocation).  Returns the set of interval signatures of every reachable
    terminal configuration."""
    u, us = design.boundaries.outer, design.boundaries.inner
    # wide enough that any pairwise sum can still reach every tail region
    lim = 2 * max(u) + 1.5
    grid = np.arange(-lim, lim, 0.0173) + 0.00317  # avoid boundary atoms
    out = set()

    def stage_states(stage, active):
        """Reachable canonical code dicts for the pairs among ``active``."""
        pairs = [p for p in PAIRS3 if p.k in active and p.k_star in active]
        uj, usj = u[stage - 1], us[stage - 1]
        if len(active) == 2:
            return {
                ((pairs[0], Code(c)),) for c in np.unique(_classify(grid, uj, usj))
            }
        c = _classify(grid, uj, usj).astype(np.int32)
        c13 = _classify(grid[:, None] + grid[None, :], uj, usj).astype(np.int32)
        combined = np.unique(c[:, None] * 81 + c13 * 9 + c[None, :])
        return {
            (
                (Pair(1, 2), Code(v // 81)),
                (Pair(1, 3), Code((v // 9) % 9)),
                (Pair(2, 3), Code(v % 9)),
            )
            for v in combined
        }

    def walk(codes, active, stage):
        """Apply the decision rules; return (remaining, stopped)."""
        dropped = set()
        for pair, code in codes:
            if code is Code.A1:
                dropped.add(pair.k)
            elif code is Code.A5:
                dropped.add(pair.k_star)
        remaining = active - dropped
        if len(remaining) <= 1:
            return remaining, True
        live = [
            c
            for p, c in codes
            if p.k in remaining and p.k_star in remaining
        ]
        if design.binding and live and all(c is Code.A3 for c in live):
            return remaining, True
        return remaining, stage == design.layout.n_stages

    def canonical(codes, active, remaining):
        """Merge non-crossing codes of pairs touching a dropped arm."""
        cells = {}
        for pair, code in codes:
            if pair.k in remaining and pair.k_star in remaining:
                cells[pair] = code
            elif code in (Code.A1, Code.A5):
                cells[pair] = code
            else:
                cells[pair] = Code.A7
        return cells

    for s1 in stage_states(1, frozenset({1, 2, 3})):
        rem1, stop1 = walk(s1, frozenset({1, 2, 3}), 1)
        c1 = canonical(s1, {1, 2, 3}, rem1)
        if stop1:
            full = {p: (c1.get(p, Code.A6), Code.A6) for p in PAIRS3}
            out.add(_sig_from_codes(full, design))
            continue
        for s2 in stage_states(2, rem1):
            rem2, _ = walk(s2, rem1, 2)
            c2 = canonical(s2, rem1, rem2)
            full = {p: (c1[p], c2.get(p, Code.A6)) for p in PAIRS3}
            out.add(_sig_from_codes(full, design))
    return out


def _sig_from_codes(codes, design):
    u, us = design.boundaries.outer, design.boundaries.inner
    cells = []
    for pair in sorted(codes):
        for j, code in enumerate(codes[pair]):
            cells.append((pair, j + 1, code_interval(code, u[j], us[j])))
    return tuple(cells)


def test_brute_force_equivalence_small(small_design):
    family = build_all_outcomes(small_design)
    sigs = {_signature(cfg, small_design) for cfg in family.configs}
    # configurations must describe pairwise-disjoint regions
    assert len(sigs) == len(family.configs)
    brute = _brute_force_outcomes(small_design)
    assert sigs == brute


def test_reference_design_counts(binding_design, binding_outcomes):
    assert len(binding_outcomes) == 25907
    power = build_lfc_power(binding_design, 1, all_outcomes=binding_outcomes)
    assert len(power) == 2974


def test_relaxed_feasibility_counts(binding_design):
    family = build_all_outcomes(binding_design, feasibility="relaxed")
    assert len(family) == 32543
    power = build_lfc_power(binding_design, 1, feasibility="relaxed", all_outcomes=family)
    assert len(power) == 3376


def test_relaxed_is_superset(small_design):
    exact = {
        tuple(sorted((p, c.codes[p]) for p in c.codes))
        for c in build_all_outcomes(small_design).configs
    }
    relaxed = {
        tuple(sorted((p, c.codes[p]) for p in c.codes))
        for c in build_all_outcomes(small_design, feasibility="relaxed").configs
    }
    assert exact <= relaxed


def test_a6_is_absorbing(binding_outcomes):
    for cfg in binding_outcomes.configs:
        for codes in cfg.codes.values():
            seen = False
            for c in codes:
                if seen:
                    assert c is Code.A6
                seen = seen or c is Code.A6


def test_terminal_profiles(small_design, binding_outcomes, binding_design):
    layout = binding_design.layout
    max_n = layout.max_sample_size
    min_n = sum(layout.size(k, 1) for k in range(1, layout.n_arms + 1))
    for cfg in binding_outcomes.configs[:500]:
        prof = terminal_profile(cfg, layout)
        assert 1 <= prof.stop_stage <= layout.n_stages
        assert min_n <= prof.sample_size(layout) <= max_n
        assert prof.survivors <= frozenset(range(1, layout.n_arms + 1))


def test_multi_relevant_selects_survivor_sets(binding_design, binding_outcomes):
    fam = build_multi_relevant(binding_design, {1, 2}, all_outcomes=binding_outcomes)
    layout = binding_design.layout
    for cfg in fam.configs:
        surv = terminal_profile(cfg, layout).survivors
        assert surv == frozenset({1, 2})


def test_size_guard():
    layout = TrialLayout.equal_allocation(7, 6, 10)
    design = TrialDesign(
        layout,
        BoundarySet(tuple([3.0] * 6), tuple([0.0] * 5 + [3.0])),
        binding=True,
    )
    with pytest.raises(EnumerationSizeError):
        build_all_outcomes(design, size_guard=10)
