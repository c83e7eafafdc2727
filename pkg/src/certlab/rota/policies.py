"""The three move-scoring policies.

Constants and branch structure are kept exactly; random draws go through a
noise source so that a rollout stream or a de-randomized source can be
plugged in.
"""

from __future__ import annotations

import math
from typing import Mapping, Protocol

FEATURE_KEYS = (
    "is_terminate_move",
    "global_num_full_cols",
    "delta_num_valid",
    "target_col_becomes_full",
    "source_col_was_full_and_is_not_anymore",
    "is_repair_move",
    "is_insert_move",
    "target_rank_deficit_after",
    "source_rank_deficit_after",
    "circuit_size",
    "target_dup_count_after",
    "rank",
    "progress_ratio",
)

# residues used by the rank-7 state-signature bias
FORTUNE_MOD = 7
CURSE_MOD = 11


class Noise(Protocol):
    def uniform(self, a: float, b: float) -> float: ...
    def random(self) -> float: ...


class Midpoint:
    """De-randomized noise: every draw returns its expected value."""

    def uniform(self, a: float, b: float) -> float:
        return (a + b) / 2.0

    def random(self) -> float:
        return 0.5


class FeatureError(KeyError):
    pass


def check_features(f: Mapping[str, float]) -> None:
    extra = set(f) - set(FEATURE_KEYS)
    if extra:
        raise FeatureError(f"unknown feature keys {sorted(extra)}")
    missing = set(FEATURE_KEYS) - set(f)
    if missing:
        raise FeatureError(f"missing feature keys {sorted(missing)}")


def rank5_score(features: Mapping[str, float], noise: Noise) -> float:
    if features.get("is_terminate_move", 0.0) > 0.5:
        return 1e9 if features.get("global_num_full_cols", 0.0) >= 5.0 else -1e9

    score = 0.0
    num_full = features.get("global_num_full_cols", 0.0)
    delta_valid = features.get("delta_num_valid", 0.0)
    becomes_full = features.get("target_col_becomes_full", 0.0) > 0.5
    breaks_full = features.get("source_col_was_full_and_is_not_anymore", 0.0) > 0.5
    is_repair = features.get("is_repair_move", 0.0) > 0.5
    is_insert = features.get("is_insert_move", 0.0) > 0.5
    target_deficit = features.get("target_rank_deficit_after", 0.0)
    source_deficit = features.get("source_rank_deficit_after", 0.0)
    circuit_size = features.get("circuit_size", 0.0)
    target_dups = features.get("target_dup_count_after", 0.0)

    trap_severity = 0.0
    trap_penalty_amplifier = 1.0
    if circuit_size > 0.0:
        if circuit_size <= 2.0:
            trap_severity, trap_penalty_amplifier = 10.0, 2.5
        elif circuit_size <= 3.0:
            trap_severity, trap_penalty_amplifier = 4.0, 1.5
        elif circuit_size <= 4.0:
            trap_severity, trap_penalty_amplifier = 1.5, 1.2
        elif circuit_size <= 5.0:
            trap_severity, trap_penalty_amplifier = 0.5, 1.05

    is_critical_trap_after = trap_severity >= 1.5
    has_trap = trap_severity > 0.0

    tension_factor = 1.0
    if has_trap:
        messiness = target_deficit + source_deficit + target_dups
        tension_factor = min(1.0 + (trap_severity * 0.08) * (1.0 + messiness), 7.0)

    phase_expansion = num_full < 3.0
    phase_stabilization = 3.0 <= num_full < 4.0
    phase_endgame = num_full >= 4.0

    urgency_factor = 1.0 + num_full * 0.4

    despair_index = 0.0
    if has_trap:
        despair_index += trap_severity * 0.5
        if is_critical_trap_after:
            despair_index += 1.0
        if is_repair:
            despair_index += 1.5 * trap_severity
            if is_critical_trap_after:
                despair_index += 0.5
    if delta_valid < 0:
        despair_index += 2.5
    elif (delta_valid == 0 and not becomes_full) and (phase_endgame or has_trap):
        despair_index += 1.5
    despair_index = min(despair_index, 7.0)

    if is_insert:
        vetoed = (
            breaks_full
            or is_critical_trap_after
            or (phase_expansion and has_trap)
            or (has_trap and not becomes_full)
        )
        if vetoed:
            return -1e9
        if has_trap:
            score -= 80000.0 * trap_severity * trap_penalty_amplifier * urgency_factor
        if not (becomes_full and delta_valid > 0):
            p = 1500.0 * urgency_factor
            p *= tension_factor
            p *= 1.0 + despair_index * 0.2
            score -= p

    elif is_repair:
        base_repair_penalty = 3500.0 * urgency_factor
        if has_trap:
            raw = base_repair_penalty * (despair_index * 0.5)
            cap = base_repair_penalty + 2000.0 * urgency_factor
            base_repair_penalty -= min(raw, cap)
        score -= base_repair_penalty

        trap_was_resolved = not has_trap
        if source_deficit > 0 and not trap_was_resolved:
            score -= 1500.0 * source_deficit * urgency_factor

        if is_critical_trap_after:
            penalty = 180000.0 * trap_penalty_amplifier * urgency_factor
            if phase_stabilization or phase_endgame:
                penalty *= 2.5
            score -= penalty
        elif has_trap:
            mult = 2.0 if phase_stabilization else 1.0
            score -= trap_severity * 4500.0 * mult * trap_penalty_amplifier * urgency_factor
        else:
            reward = 300000.0 * urgency_factor
            if phase_stabilization:
                reward *= 1.4
            score += reward
            if target_dups == 0:
                bonus = 100000.0 * urgency_factor * (1.0 + despair_index * 0.7)
                if phase_stabilization or phase_endgame:
                    bonus *= 1.6
                score += bonus

        is_endgame_gambit = phase_endgame and becomes_full
        is_circuit_breaker = (phase_stabilization or despair_index > 1.0) and trap_was_resolved
        if breaks_full and (is_endgame_gambit or is_circuit_breaker):
            quality = 1.0 if target_deficit == 0 else 0.8
            bonus = 160000.0 * urgency_factor * quality
            bonus *= 1.0 + despair_index * 0.5
            score += bonus
        elif breaks_full:
            score -= 130000.0 * urgency_factor

    phase_bonus_multiplier = 1.5 if phase_expansion else (1.2 if phase_stabilization else 1.0)
    if target_deficit == 0:
        score += 3500.0 * urgency_factor * phase_bonus_multiplier
    if target_dups == 0:
        score += 3000.0 * urgency_factor * phase_bonus_multiplier

    if delta_valid > 0:
        progress_reward = 120000.0 * urgency_factor
        if is_repair:
            progress_reward *= 1.5 + despair_index * 0.5
        if phase_endgame:
            progress_reward += 30000.0 * urgency_factor
        score += progress_reward
    elif delta_valid < 0:
        regression = 100000.0 * urgency_factor
        if is_repair:
            regression *= 1.2 + despair_index * 0.3
        score -= regression

    score -= 1500.0 * target_deficit * urgency_factor * tension_factor
    score -= 1000.0 * source_deficit * urgency_factor * tension_factor

    dup_penalty = 3000.0 * target_dups
    if target_dups > 1.0:
        dup_penalty *= 1.5
    score -= dup_penalty * urgency_factor * tension_factor

    if phase_endgame or (phase_stabilization and is_repair) or despair_index > 1.0:
        noise_mag = 400.0 * urgency_factor * math.exp(despair_index * 0.35)
        score += noise.uniform(-noise_mag, noise_mag)
    return score


def rank7_score(features: Mapping[str, float], noise: Noise) -> float:
    if features.get("is_terminate_move", 0.0) > 0.5:
        return 1e9 if features.get("global_num_full_cols", 0.0) >= 7.0 else -1e9

    score = 0.0
    num_full = features.get("global_num_full_cols", 0.0)
    delta_valid = features.get("delta_num_valid", 0.0)
    becomes_full = features.get("target_col_becomes_full", 0.0) > 0.5
    breaks_full = features.get("source_col_was_full_and_is_not_anymore", 0.0) > 0.5
    is_repair = features.get("is_repair_move", 0.0) > 0.5
    is_insert = features.get("is_insert_move", 0.0) > 0.5
    target_deficit = features.get("target_rank_deficit_after", 0.0)
    source_deficit = features.get("source_rank_deficit_after", 0.0)
    circuit_size = features.get("circuit_size", 0.0)
    target_dups = features.get("target_dup_count_after", 0.0)

    phase_endgame = num_full >= 6.0
    desperate = phase_endgame and not becomes_full and delta_valid <= 0
    threshold = 3.0 + (num_full >= 4.0) + (num_full >= 6.0) + desperate

    has_trap_after = circuit_size > 0.0
    is_critical_trap_after = has_trap_after and circuit_size <= threshold

    urgency_factor = 1.0 + (num_full / 7.0) ** 2.5 * 5.8
    time_pressure_factor = 1.0 + (num_full / 7.0) ** 2.2 * 4.0

    if delta_valid > 0:
        reward = 120000.0 * delta_valid
        if phase_endgame:
            reward *= 1.5
        score += reward
    elif delta_valid < 0:
        score -= 100000.0 * abs(delta_valid)

    if is_insert:
        if breaks_full or is_critical_trap_after:
            return -1e9
        if becomes_full:
            score += 80000.0
            if target_deficit == 0 and target_dups == 0:
                score += 40000.0
        elif delta_valid == 0:
            if target_deficit <= 1.0 and target_dups == 0.0 and not has_trap_after:
                score += 25000.0 * (1.0 + num_full / 7.0)
            stall = 2000.0
            if has_trap_after:
                stall += 15000.0
                if is_critical_trap_after:
                    stall += 30000.0
                stall += 5000.0 * (target_deficit + target_dups)
            if desperate:
                messy = has_trap_after or target_deficit > 1.0 or target_dups > 0
                if messy:
                    stall += 40000.0
                else:
                    stall += noise.uniform(6000.0, 22000.0)
                    if noise.random() < 0.6:
                        score += noise.uniform(7000.0, 18000.0)
            endgame_multiplier = 2.0 if phase_endgame else 1.0
            score -= stall * endgame_multiplier * time_pressure_factor

    elif is_repair:
        resolved = not has_trap_after
        if resolved:
            score += 300000.0 * (2.0 if phase_endgame else 1.0)

        trap_penalty = 0.0
        if is_critical_trap_after:
            trap_penalty = 200000.0 * (3.0 if phase_endgame else 1.0)
        elif has_trap_after:
            trap_penalty = 50000.0 * (1.5 if phase_endgame else 1.0)
        score -= trap_penalty

        if breaks_full:
            penalty = 150000.0
            if resolved:
                penalty = -25000.0
            elif desperate:
                clean = not has_trap_after and target_deficit == 0.0 and source_deficit == 0.0
                penalty = -15000.0 if clean else penalty * 0.4
            elif phase_endgame:
                penalty *= 1.5
            score -= penalty

        cost = 4000.0
        if resolved:
            cost -= 2500.0
        elif has_trap_after:
            cost += 1000.0 * circuit_size
        if target_deficit <= 1.0 and target_dups == 0.0:
            cost -= 1500.0
        if phase_endgame and (is_critical_trap_after or desperate):
            mult = 0.3
        else:
            mult = time_pressure_factor
        score -= cost * mult

    quality = 2000.0 * target_deficit + 1500.0 * source_deficit + 3500.0 * target_dups
    score -= quality * time_pressure_factor

    if num_full >= 5.0:
        score += noise.uniform(-4000.0, 4000.0)

    signature = (
        int(num_full * 1e2)
        + int(target_deficit * 1e1)
        + int(source_deficit * 7)
        + int(target_dups * 5)
        + int(circuit_size)
    )
    fortunate = signature % FORTUNE_MOD == 0
    cursed = signature % CURSE_MOD == 0
    if num_full >= 4.0:
        if fortunate and not cursed:
            score += 35000.0
        elif cursed and not fortunate:
            score -= 45000.0
        elif cursed and fortunate:
            score -= 80000.0

    return score * urgency_factor


def scale_trap_energy(circuit_size: float, rank: float) -> float:
    """Small circuits are deep traps; the energy grows with rank."""
    if circuit_size <= 0.0:
        return 0.0
    return 20.0 / (max(circuit_size, 1.5) - 1.0) * (rank / 5.0)


def scale_aware_score(features: Mapping[str, float], noise: Noise) -> float:
    rank = features.get("rank", 5.0)
    num_full = features.get("global_num_full_cols", 0.0)
    progress_ratio = features.get("progress_ratio", 0.0)

    if features.get("is_terminate_move", 0.0) > 0.5:
        return 1e12 if num_full >= rank else -1e12

    score = 0.0
    delta_valid = features.get("delta_num_valid", 0.0)
    becomes_full = features.get("target_col_becomes_full", 0.0) > 0.5
    breaks_full = features.get("source_col_was_full_and_is_not_anymore", 0.0) > 0.5
    is_repair = features.get("is_repair_move", 0.0) > 0.5
    is_insert = features.get("is_insert_move", 0.0) > 0.5
    target_deficit = features.get("target_rank_deficit_after", 0.0)
    source_deficit = features.get("source_rank_deficit_after", 0.0)
    circuit_size = features.get("circuit_size", 0.0)
    target_dups = features.get("target_dup_count_after", 0.0)

    c_deficit = 4000.0
    c_dup = 3000.0
    rank_scaler = rank / 5.0

    trap_energy = scale_trap_energy(circuit_size, rank)
    trap_intensity = 0.0
    if trap_energy > 0.0:
        trap_intensity = min(1.0, trap_energy / (10.0 * rank_scaler + 1e-6))

    progress_intensity = progress_ratio
    early_midgame_intensity = 1.0 - progress_ratio

    stagnation_intensity = 0.0
    if circuit_size == 0.0 and (target_deficit > 0.0 or target_dups > 0.0 or (is_repair and source_deficit > 0.0)):
        stagnation = target_deficit * 2.0 + target_dups * 2.0
        if is_repair:
            stagnation += source_deficit * 1.0
        stagnation_intensity = min(1.0, (stagnation / (rank * 2.0 + 1e-6)) * 0.6)

    pressure = 1.0
    columns_remaining = max(1.0, rank - num_full)
    exponential_rate = (8.0 * math.sqrt(rank_scaler)) * (1.0 - trap_intensity * 0.6 - stagnation_intensity * 0.3)
    mid_game_start, end_game_start = 0.5, 0.75
    if progress_ratio > mid_game_start:
        linear_progress = (progress_ratio - mid_game_start) / (end_game_start - mid_game_start + 1e-6)
        pressure += 0.5 * linear_progress * rank_scaler
    if progress_ratio > end_game_start:
        pressure += math.exp(exponential_rate * (progress_ratio - end_game_start)) - 1.0
    remaining_ratio = columns_remaining / rank
    if progress_ratio > 0.8 or columns_remaining <= 3:
        imminence = 20.0 * rank_scaler * (1.0 - trap_intensity * 0.7 - stagnation_intensity * 0.3)
        pressure += math.exp(-imminence * remaining_ratio) * max(
            0.0, 1.0 - trap_intensity - stagnation_intensity * 0.5
        )
    pressure = max(
        1.0, pressure * ((1.0 + rank_scaler / 2.0) * (1.0 - trap_intensity * 0.2 - stagnation_intensity * 0.1))
    )

    barrier_porosity = 1.0
    if is_repair and trap_energy > 0.0:
        from_trap = min(0.8, trap_intensity * 0.8)
        improvement = 0.0
        if target_deficit == 0.0 and target_dups == 0.0:
            improvement = 1.0
        elif target_deficit < rank / 5.0 or target_dups < 2.0:
            improvement = 0.5
        from_improvement = min(0.3, improvement * math.sqrt(rank_scaler) * 0.5)
        from_urgency = min(0.4, math.sqrt(rank_scaler) * 0.2)
        barrier_porosity = 1.0 - min(0.95, from_trap + from_improvement + from_urgency)
    barrier = (100000.0 * rank_scaler) * barrier_porosity

    instability = 0.0
    if max(trap_intensity, stagnation_intensity) > 0.1:
        total = target_deficit * target_dups
        if is_repair:
            total += 0.5 * source_deficit * target_deficit
        instability = (100000.0 * rank_scaler * (1.0 + pressure * 0.5)) * total * trap_intensity
        instability = min(instability, 750000.0 * rank_scaler)

    precision = ((1.0 + pressure * 0.5) * rank_scaler) * (
        1.0 + progress_intensity * 1.5 - trap_intensity * 0.75 - stagnation_intensity * 0.5
    )
    precision = min(precision, 10.0 * rank_scaler * (1.0 + pressure * 0.5))

    singularity = 0.0
    if target_deficit > 0.0 and target_dups > 0.0 and circuit_size > 0.0:
        amplification = math.exp(5.0 * progress_ratio) - 1.0
        singularity = 1.5e6 * rank_scaler * (1.0 + amplification) * (1.0 + pressure)
        singularity *= 1.0 - trap_intensity * 0.5
        singularity = min(singularity, 5.0e6 * rank_scaler * (1.0 + pressure))

    if is_repair and breaks_full and circuit_size == 0.0 and target_dups == 0.0 and target_deficit == 0.0:
        crisis = max(trap_intensity, stagnation_intensity * 0.8)
        meltdown = 250000.0 * rank_scaler * crisis * (1.0 + pressure)
        floor = 50000.0 * rank_scaler * (1.0 + pressure)
        barrier = -max(meltdown, floor)

    if is_insert:
        if breaks_full:
            return -1e9
        if delta_valid > 0:
            score += 80000.0 * delta_valid * (1.0 + pressure + early_midgame_intensity * 0.5 + progress_intensity * 0.25)
        elif delta_valid < 0:
            return -1e9
        if becomes_full:
            score += 200000.0 * (1.0 + pressure + progress_intensity * 0.5)
        if circuit_size > 0.0:
            score -= 750000.0 * trap_energy * pressure * (1.0 - early_midgame_intensity * 0.3)
        score -= c_deficit * math.pow(target_deficit, 1.5) * precision
        score -= c_dup * math.pow(target_dups, 1.2) * precision
        score -= instability
        score -= singularity
        if delta_valid == 0 and not becomes_full:
            score -= 1000.0 * (1.0 + pressure + progress_intensity * 0.5)

    elif is_repair:
        score -= 2000.0 * rank_scaler * (1.0 - trap_intensity * 0.5)
        score -= c_deficit * math.pow(target_deficit, 1.5) * precision
        score -= c_dup * math.pow(target_dups, 1.2) * precision
        score -= c_deficit * math.pow(source_deficit, 1.5) * precision
        score -= instability
        score -= singularity
        if delta_valid > 0:
            score += 80000.0 * delta_valid * (1.0 + pressure + trap_energy * 0.4)
        elif delta_valid < 0:
            decrease = 40000.0 * delta_valid * (1.0 + pressure)
            decrease *= 1.0 - (trap_intensity * 0.75 * (1.0 - progress_ratio * 0.5))
            score += decrease
        score -= barrier
        if circuit_size == 0.0:
            score += 800000.0 * rank_scaler * pressure * (1.0 + trap_intensity)
        else:
            score -= 40000.0 * trap_energy * pressure

    if target_deficit == 0:
        score += 2000.0 * rank_scaler * (1.0 + pressure * 0.5 + progress_intensity)
    if target_dups == 0:
        score += 1000.0 * rank_scaler * (1.0 + pressure * 0.5 + progress_intensity)

    frustration = trap_energy + (stagnation_intensity * 5.0 * rank_scaler)
    noise_magnitude = 3500.0 * rank_scaler * min(3.0, frustration / (1.0 + pressure * 0.25 + 1e-6))
    score += noise.uniform(-noise_magnitude, noise_magnitude)
    return score


POLICIES = {"rank5": rank5_score, "rank7": rank7_score, "scale": scale_aware_score}


def policy_score(policy: str, features: Mapping[str, float], noise: Noise | None = None) -> float:
    """Score one feature vector; ``noise=None`` means de-randomized."""
    check_features(features)
    try:
        fn = POLICIES[policy]
    except KeyError:
        raise ValueError(f"unknown policy {policy!r}") from None
    return fn(features, noise if noise is not None else Midpoint())
