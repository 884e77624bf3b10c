from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from ragkit.markdown import (
    build_sources_block,
    extract_citations,
    repair_markdown,
    validate_markdown,
)

VALID_CITED = (
    "The collider program is described in [2301.00001].\n\n"
    "## Sources\n\n- [2301.00001](https://arxiv.org/abs/2301.00001)\n"
)


class TestValidate:
    def test_plain_sentence_with_block(self):
        assert validate_markdown(VALID_CITED).ok

    def test_plain_sentence_no_citations_needs_no_block(self):
        assert validate_markdown("Just a plain sentence.").ok

    def test_unclosed_fence(self):
        report = validate_markdown("```python\nprint(1)\n")
        assert not report.ok
        assert "unbalanced fence" in report.violations

    def test_balanced_fence_ok(self):
        assert validate_markdown("```python\nprint(1)\n```\ndone").ok

    def test_cited_id_missing_from_block(self):
        text = (
            "See [2301.00001] and [2302.11111].\n\n"
            "## Sources\n\n- [2301.00001](https://arxiv.org/abs/2301.00001)\n"
        )
        report = validate_markdown(text)
        assert not report.ok
        assert any(v.startswith("missing source entry") for v in report.violations)

    def test_cited_id_no_block_at_all(self):
        report = validate_markdown("See [2301.00001].")
        assert not report.ok
        assert "missing sources block" in report.violations

    def test_odd_inline_backticks(self):
        report = validate_markdown("a `broken span")
        assert not report.ok
        assert any("unbalanced inline code" in v for v in report.violations)

    def test_empty_link_url(self):
        report = validate_markdown("a [label]() link")
        assert not report.ok
        assert any("empty link url" in v for v in report.violations)

    def test_control_characters(self):
        report = validate_markdown("bad \x07 bell")
        assert not report.ok
        assert "control character" in report.violations

    def test_citations_inside_fences_ignored(self):
        text = "```\n[2301.00001]\n```\nplain text"
        assert validate_markdown(text).ok


class TestExtractCitations:
    def test_order_and_dedup(self):
        text = "b [2302.22222] then [2301.00001] then [2302.22222] again"
        assert extract_citations(text) == ["2302.22222", "2301.00001"]

    def test_links_are_not_citations(self):
        text = "[2301.00001](https://arxiv.org/abs/2301.00001)"
        assert extract_citations(text) == []

    def test_old_style_ids(self):
        assert extract_citations("see [hep-ph/0703123]") == ["hep-ph/0703123"]

    def test_non_arxiv_brackets_ignored(self):
        assert extract_citations("[note] [TODO] [1]") == []


class TestRepair:
    def test_valid_input_unchanged(self):
        assert repair_markdown(VALID_CITED) == VALID_CITED

    def test_closes_fence(self):
        out = repair_markdown("```python\nx = 1\n")
        assert validate_markdown(out).ok

    def test_appends_sources_block(self):
        out = repair_markdown("claim backed by [2301.00001]")
        report = validate_markdown(out)
        assert report.ok
        assert "## Sources" in out
        assert "- [2301.00001](https://arxiv.org/abs/2301.00001)" in out

    def test_appends_missing_entry_to_existing_block(self):
        text = (
            "See [2301.00001] and [2302.11111].\n\n"
            "## Sources\n\n- [2301.00001](https://arxiv.org/abs/2301.00001)\n"
        )
        out = repair_markdown(text)
        assert validate_markdown(out).ok
        assert "- [2302.11111](https://arxiv.org/abs/2302.11111)" in out

    def test_strips_control_chars(self):
        out = repair_markdown("a\x07b\rc")
        assert validate_markdown(out).ok
        assert "\x07" not in out and "\r" not in out

    def test_escapes_stray_backtick(self):
        out = repair_markdown("one ` stray")
        assert validate_markdown(out).ok

    def test_unwraps_empty_link(self):
        out = repair_markdown("a [label]() link")
        assert validate_markdown(out).ok
        assert "label" in out

    @settings(max_examples=500, deadline=None)
    @given(st.text(max_size=300))
    def test_repair_is_total(self, text):
        assert validate_markdown(repair_markdown(text)).ok

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(
            st.sampled_from(
                ["```", "`x`", "`", "[2301.00001]", "[a]()", "[b](u)", "## Sources", "text"]
            ),
            max_size=20,
        )
    )
    def test_repair_total_on_markdownish_inputs(self, parts):
        text = "\n".join(parts)
        assert validate_markdown(repair_markdown(text)).ok


def test_build_sources_block_shape():
    block = build_sources_block(["2301.00001", "hep-ph/0703123"])
    assert block.startswith("## Sources")
    assert "- [hep-ph/0703123](https://arxiv.org/abs/hep-ph/0703123)" in block
