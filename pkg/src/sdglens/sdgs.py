"""Canonical SDG labels shared across tagging, parsing and reporting."""

from __future__ import annotations

SDG_MIN = 0  # 0 = not relevant to any SDG
SDG_MAX = 17

# Goal names as used in the prompt list; index 0 is the not-relevant label.
SDG_NAMES = (
    "Not relevant",
    "No poverty",
    "Zero Hunger",
    "Good health and well-being",
    "Quality education",
    "Gender equality",
    "Clean Water and Sanitation",
    "Affordable and clean energy",
    "Decent work and economic growth",
    "Industry, innovation and infrastructure",
    "Reduced inequalities",
    "Sustainable cities and communities",
    "Responsible consumption and production",
    "Climate action",
    "Life below water",
    "Life on land",
    "Peace, justice and strong institutions",
    "Partnerships for the goals",
)


def is_valid_sdg(value: int) -> bool:
    return SDG_MIN <= value <= SDG_MAX


def sdg_name(value: int) -> str:
    if not is_valid_sdg(value):
        raise ValueError(f"SDG number out of range: {value}")
    return SDG_NAMES[value]
