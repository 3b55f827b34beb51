"""Prompt templates for the LLM strategy and the interlinkage extraction.

Template bodies are kept byte-exact with their published wording, quirks
included ("if if", the second relationship example labelled "synergic").
A corrected set is available behind `corrected=True` but stays off by
default so cached responses and transcripts remain comparable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

PLACEHOLDERS = ("text", "Read_description", "main_sdg", "secondary_sdg")

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class PromptError(Exception):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str

    def placeholders(self) -> list[str]:
        seen = []
        for name in _PLACEHOLDER_RE.findall(self.body):
            if name not in seen:
                seen.append(name)
        return seen


_SDG_LIST_COMMAS = (
    "1) No poverty, 2) Zero Hunger, 3) Good health and well-being, 4) Quality education, "
    "5) Gender equality, 6) Clean Water and Sanitation, 7) Affordable and clean energy, "
    "8) Decent work and economic growth, 9) Industry, innovation and infrastructure, "
    "10) Reduced inequalities, 11) Sustainable cities and communities, "
    "12) Responsible consumption and production, 13) Climate action, 14) Life below water, "
    "15) Life on land, 16) Peace, justice and strong institutions, 17) Partnerships for the goals"
)

_SDG_LIST_PLAIN = (
    "1) No poverty 2) Zero Hunger 3) Good health and well-being 4) Quality education "
    "5) Gender equality 6) Clean Water and Sanitation 7) Affordable and clean energy "
    "8) Decent work and economic growth 9) Industry, innovation and infrastructure "
    "10) Reduced inequalities 11) Sustainable cities and communities "
    "12) Responsible consumption and production 13) Climate action 14) Life below water "
    "15) Life on land 16) Peace, justice and strong institutions 17) Partnerships for the goals"
)

_VARIANT_DOMINANCE = "Assign the following text to the top three SDGs based on their dominance \n\n{text}"
_VARIANT_RELEVANCE = "Assign the following text to the top three SDGs per relevance \n\n{text}"
_VARIANT_PROMINENCE = "Assign the following text to the top three SDGs based on their prominence \n\n{text}"

_TWOSTEP_SDG = (
    "Assign the following text to all relevant SDGs (strictly from the following list: "
    + _SDG_LIST_COMMAS
    + "). If a paragraph tackles non relevant issues with respect to any SDG, assign 0"
    + "\n\n{text}"
)

_TWOSTEP_SENTIMENT_RULES = (
    "Use the following rules to interpret a paragraph: Consider climate adaptation as the "
    "adjustment in natural or human systems in response to actual or expected climatic stimuli "
    "or their effects, which moderates harm or exploits beneficial opportunities. Also consider, "
    "climate mitigation as an anthropogenic intervention to reduce the sources or enhance the "
    "sinks of greenhouse gas. Assign to each paragraph one and one only number between 0, 1 and 2. "
    "Assign 0 {IF} the paragraph explains or present an action or a set of actions which pose "
    "concrete risks to at least one between climate adaptation and mitigation; assign 1 if the "
    "paragraph is neutral with respect to climate adaptation and mitigation and does not express "
    "or discuss any concrete opportunity or risk for the country; assign 2 if the paragraph "
    "explains or present an action or a set of actions which pose concrete opportunities to at "
    "least one between climate adaptation and mitigation."
    "\n\n{text}"
)

_INTERLINK_STAGE1 = (
    "First Prompt: Identifying SDGs\n"
    "\n"
    "** Text ** :\n"
    "\n"
    "{text}\n"
    "\n"
    "** Instructions **:\n"
    "\n"
    "Assign each index in this text to the main Sustainable Development Goal, as well as every "
    "other relevant but secondary SDG (strictly from the following list: "
    + _SDG_LIST_PLAIN
    + "). If a paragraph tackles non relevant issues with respect to any SDG, assign 0.\n"
    "\n"
    "** Context **:\n"
    "\n"
    "Use the UN Sustainable Development Goals (SDGs) definitions in order to assign all the "
    "relevant SDGs to the text given above. Here are the definitions: {Read_description}\n"
    "\n"
    "** Output Format **:\n"
    "\n"
    "Main SDG (pertinent number): Name of main SDG\n"
    "Reason main SDG (pertinent number): clear justification as to how the SDG is the main SDG "
    "for the given text\n"
    "\n"
    "Secondary SDG (pertinent number): Name of SDG\n"
    "Reason secondary SDG (pertinent number): clear justification as to how the SDG is pertinent "
    "but secondary to the given text\n"
    "\n"
    "... and so on with as many pertinent but secondary SDGs for the given text."
)

_INTERLINK_STAGE2_TEMPLATE = (
    "Second Prompt: Evaluating relationships.\n"
    "\n"
    '** Original Text **: Text to analyze: "{text}"\n'
    "\n"
    "** SDG Description **: {Read_description}\n"
    "\n"
    "** Instructions **:\n"
    "\n"
    "**Evaluate Inter-relationships:** For each pair of SDGs identified within a text, determine "
    "whether they exhibit: **Synergy:** The SDGs positively reinforce or complement each other, "
    "contributing to a shared outcome. An example of a synergic relationship can be found in the "
    'following text "Climate change will increase the agricultural yield by 15%". **Trade-off:** '
    "The SDGs potentially conflict or compete with each other, where achieving one goal might "
    "negatively impact another. An example of a {TRADEOFF_LABEL} relationship can be found in the "
    'following text "Climate change will increase poverty by 64% over the next 5 years". '
    "**Neutral:** The link between the SDG Pair is not clear in the context of the text. "
    "**Identify directionality of inter-relationship:** For each synergy or trade-off identified, "
    'find explicit directionality of impact: Assign "outward" if the direction goes from the '
    "first identified SDG towards the second. An example of an outward trade-off can be found "
    'between SDG13 and SDG1 in the following text: "Climate change will increase poverty rates '
    'by 10% globally". Assign "inward" if the direction goes from the second identified SDG '
    "towards the first. An example of an inward trade-off can be found between SDG1 and SDG13 in "
    'the following text: "Climate change will increase poverty rates by 10% globally". Assign '
    '"both" if the direction goes both from the first to second and from the second to the first '
    "identified SDG. An example of a both trade-off can be found between SDG13 and SDG1 in the "
    'following text: "Climate change and poverty rates will increase by 10% globally".\n'
    "\n"
    "** Output Format **:\n"
    "\n"
    "- SDG Pair: SDG SDG {main_sdg} - {secondary_sdg}\n"
    "- Relationship: [Synergy/Trade-off/Neutral]\n"
    "- Directionality: [Inward/Outward/Both]\n"
    "- Explanation: Using extracts from the text, reason how the SDG Pair constitutes a synergy "
    "or trade-off or neutral.\n"
    "\n"
    "Also, explain your Directionality assignment."
)


def _build_templates(corrected: bool) -> dict[str, PromptTemplate]:
    sentiment = _TWOSTEP_SENTIMENT_RULES.replace("{IF}", "if" if corrected else "if if")
    stage2 = _INTERLINK_STAGE2_TEMPLATE.replace(
        "{TRADEOFF_LABEL}", "trade-off" if corrected else "synergic"
    )
    bodies = {
        "variant_dominance": _VARIANT_DOMINANCE,
        "variant_relevance": _VARIANT_RELEVANCE,
        "variant_prominence": _VARIANT_PROMINENCE,
        "twostep_sdg": _TWOSTEP_SDG,
        "twostep_sentiment": sentiment,
        "interlink_stage1": _INTERLINK_STAGE1,
        "interlink_stage2": stage2,
    }
    return {tid: PromptTemplate(tid, body) for tid, body in bodies.items()}


_TEMPLATES = _build_templates(corrected=False)
_TEMPLATES_CORRECTED = _build_templates(corrected=True)

TEMPLATE_IDS = tuple(_TEMPLATES)
VARIANT_IDS = ("variant_dominance", "variant_relevance", "variant_prominence")


def get_template(template_id: str, corrected: bool = False) -> PromptTemplate:
    registry = _TEMPLATES_CORRECTED if corrected else _TEMPLATES
    try:
        return registry[template_id]
    except KeyError:
        raise PromptError(f"unknown template: {template_id}") from None


def render_prompt(
    template: PromptTemplate,
    bindings: Mapping[str, str],
    warnings: list[str] | None = None,
) -> str:
    """Substitute placeholders literally (single pass, no escaping).

    Raises on any unbound placeholder; binding keys the template never uses
    only produce a warning.
    """
    needed = template.placeholders()
    for name in needed:
        if name not in PLACEHOLDERS:
            raise PromptError(f"template {template.template_id} has invalid placeholder: {name}")
        if name not in bindings:
            raise PromptError(f"unbound placeholder: {name}")
    if warnings is not None:
        for key in bindings:
            if key not in needed:
                warnings.append(f"unused binding: {key}")
    return _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), template.body)


def validate_registry() -> None:
    for registry in (_TEMPLATES, _TEMPLATES_CORRECTED):
        for template in registry.values():
            for name in template.placeholders():
                if name not in PLACEHOLDERS:
                    raise PromptError(
                        f"template {template.template_id} has invalid placeholder: {name}"
                    )


validate_registry()
