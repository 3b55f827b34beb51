from __future__ import annotations

import pytest

from sdglens.prompts import (
    TEMPLATE_IDS,
    VARIANT_IDS,
    PromptError,
    get_template,
    render_prompt,
)


class TestTemplateBodies:
    def test_all_templates_registered(self):
        assert set(TEMPLATE_IDS) == {
            "variant_dominance",
            "variant_relevance",
            "variant_prominence",
            "twostep_sdg",
            "twostep_sentiment",
            "interlink_stage1",
            "interlink_stage2",
        }

    def test_variant_wordings(self):
        assert "based on their dominance" in get_template("variant_dominance").body
        assert "per relevance" in get_template("variant_relevance").body
        assert "based on their prominence" in get_template("variant_prominence").body

    def test_twostep_sdg_keeps_full_goal_list(self):
        body = get_template("twostep_sdg").body
        assert body.startswith("Assign the following text to all relevant SDGs")
        assert "13) Climate action" in body
        assert "17) Partnerships for the goals" in body
        assert "assign 0" in body

    def test_twostep_sentiment_keeps_published_typo(self):
        body = get_template("twostep_sentiment").body
        assert "one and one only number between 0, 1 and 2" in body
        assert "Assign 0 if if the paragraph" in body

    def test_corrected_sentiment_fixes_typo(self):
        body = get_template("twostep_sentiment", corrected=True).body
        assert "if if" not in body
        assert "Assign 0 if the paragraph" in body

    def test_stage2_keeps_mislabelled_example(self):
        body = get_template("interlink_stage2").body
        # the published prompt labels its trade-off example "synergic"
        assert (
            'an example of a synergic relationship can be found in the following text '
            '"climate change will increase poverty by 64%' in body.lower()
        )

    def test_corrected_stage2_relabels_example(self):
        body = get_template("interlink_stage2", corrected=True).body
        assert (
            'example of a trade-off relationship can be found in the following text '
            '"Climate change will increase poverty by 64%' in body
        )

    def test_stage2_directionality_examples(self):
        body = get_template("interlink_stage2").body
        assert "Climate change will increase poverty rates by 10% globally" in body
        assert "Climate change and poverty rates will increase by 10% globally" in body
        assert "- SDG Pair: SDG SDG {main_sdg} - {secondary_sdg}" in body

    def test_placeholders_per_template(self):
        assert get_template("twostep_sdg").placeholders() == ["text"]
        assert get_template("interlink_stage1").placeholders() == ["text", "Read_description"]
        assert get_template("interlink_stage2").placeholders() == [
            "text",
            "Read_description",
            "main_sdg",
            "secondary_sdg",
        ]

    def test_unknown_template(self):
        with pytest.raises(PromptError, match="unknown template"):
            get_template("variant_bogus")


class TestRenderPrompt:
    def test_twostep_contains_text_after_instruction(self):
        prompt = render_prompt(
            get_template("twostep_sdg"), {"text": "Solar capacity will triple."}
        )
        head, _, tail = prompt.partition("\n\n")
        assert head.startswith("Assign the following text to all relevant SDGs")
        assert tail == "Solar capacity will triple."

    def test_variant_ends_with_bound_text(self):
        for vid in VARIANT_IDS:
            prompt = render_prompt(get_template(vid), {"text": "Any paragraph."})
            assert prompt.endswith("Any paragraph.")

    def test_unbound_placeholder_named(self):
        with pytest.raises(PromptError, match="unbound placeholder: text"):
            render_prompt(
                get_template("interlink_stage2"),
                {"Read_description": "d", "main_sdg": "13", "secondary_sdg": "1"},
            )

    def test_unused_binding_warns(self):
        warnings: list[str] = []
        render_prompt(
            get_template("twostep_sdg"), {"text": "x", "main_sdg": "13"}, warnings
        )
        assert warnings == ["unused binding: main_sdg"]

    def test_substitution_is_single_pass(self):
        # a paragraph containing "{text}" must not be re-expanded
        prompt = render_prompt(get_template("twostep_sdg"), {"text": "literal {text} inside"})
        assert prompt.endswith("literal {text} inside")

    def test_stage2_pair_line_renders_numbers(self):
        prompt = render_prompt(
            get_template("interlink_stage2"),
            {"text": "t", "Read_description": "d", "main_sdg": "13", "secondary_sdg": "1"},
        )
        assert "- SDG Pair: SDG SDG 13 - 1" in prompt
