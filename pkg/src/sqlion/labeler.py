"""Rule-based risk classification of a counted query.

Levels run 1 (without risk) to 4 (high risk).  The base level comes from the
highest tier among alphabetic patterns that matched; symbol groups then bump
the level, each group at most once, in the fixed order A, B, C:

* group A (quote / hex markers) adds +1 while the level is below 4,
* group B (comparison, parentheses, dot, digit runs) below 3,
* group C (comment markers, %, #, ;) below 2.

Only presence matters — doubling every count never changes the outcome — and
the result is always within 1..4.
"""

from __future__ import annotations

from .features import FeatureVector, TokenDictionary

LEVEL_WITHOUT_RISK = 1
LEVEL_SMALL_RISK = 2
LEVEL_RISK = 3
LEVEL_HIGH_RISK = 4

RISK_LEVELS = (1, 2, 3, 4)

BENIGN = "benign"
SUSPICIOUS = "suspicious"
ATTACK = "attack"

DEFAULT_BLOCK_THRESHOLD = 3

# Modifier groups fire in this order; each condition reads the running level.
_GROUP_CAPS = (("A", 4), ("B", 3), ("C", 2))


def assign_risk(fv: FeatureVector, dictionary: TokenDictionary) -> int:
    """Risk level 1..4 for a feature vector counted with ``dictionary``."""
    alpha = fv.alpha_counts()
    present_tiers = {
        dictionary.tiers[p] for i, p in enumerate(dictionary.alpha_patterns) if alpha[i] > 0
    }
    if 4 in present_tiers:
        level = 4
    elif 3 in present_tiers:
        level = 3
    elif 2 in present_tiers:
        level = 2
    else:
        level = 1

    symbols = fv.symbol_counts()
    present_groups = {
        dictionary.groups[p] for i, p in enumerate(dictionary.symbol_patterns) if symbols[i] > 0
    }
    for group, cap in _GROUP_CAPS:
        if group in present_groups and level < cap:
            level += 1
    return min(level, 4)


def verdict_from_level(level: int, block_threshold: int = DEFAULT_BLOCK_THRESHOLD) -> str:
    """Collapse a 1..4 level onto benign / suspicious / attack.

    ``block_threshold`` must be 2, 3 or 4; at or above it is an attack, one
    below it (when the threshold leaves room) is suspicious.
    """
    if block_threshold not in (2, 3, 4):
        raise ValueError(f"block threshold must be 2, 3 or 4, got {block_threshold}")
    if level not in RISK_LEVELS:
        raise ValueError(f"risk level out of range: {level}")
    if level >= block_threshold:
        return ATTACK
    if block_threshold > 2 and level == block_threshold - 1:
        return SUSPICIOUS
    return BENIGN
