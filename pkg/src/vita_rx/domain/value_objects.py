"""
Domain Value Objects — immutable, self-validating enumerations.

Value objects name the discrete choices of the model and the harness
(encoder variants, history filters, scoring rules). They parse their own
CLI spellings and reject anything else.
"""

from __future__ import annotations

from enum import Enum


class EncoderVariant(str, Enum):
    """Encoder behaviours: the full model and its ablation variants."""

    FULL = "full"
    NO_SELECTION = "no_selection"
    TOP1 = "top1"
    SHARP = "sharp"
    MEAN_POOL = "mean_pool"
    RNN = "rnn"
    STD_ATTENTION = "std_attention"

    @property
    def display_name(self) -> str:
        """Label used in ablation reports."""
        return {
            EncoderVariant.FULL: "VITA",
            EncoderVariant.NO_SELECTION: "VITA-RS",
            EncoderVariant.TOP1: "VITA-RS_Top-1",
            EncoderVariant.SHARP: "VITA-RS_sharp",
            EncoderVariant.MEAN_POOL: "VITA-TA_avg",
            EncoderVariant.RNN: "VITA-TA_RNN",
            EncoderVariant.STD_ATTENTION: "VITA-TA_attn",
        }[self]

    @property
    def uses_selection(self) -> bool:
        """Whether the relevant-visit selection module gates past visits."""
        return self in {
            EncoderVariant.FULL,
            EncoderVariant.MEAN_POOL,
            EncoderVariant.RNN,
            EncoderVariant.STD_ATTENTION,
        }

    @classmethod
    def from_str(cls, value: str) -> EncoderVariant:
        """Parse a variant name or one of its ablation aliases (case-insensitive)."""
        normalized = value.strip().lower().replace("-", "_")
        if normalized in _VARIANT_ALIASES:
            return _VARIANT_ALIASES[normalized]
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(
            f"Unsupported encoder variant '{value}'. "
            f"Supported: {', '.join(m.value for m in cls)} "
            f"(aliases: {', '.join(sorted(_VARIANT_ALIASES))})"
        )


_VARIANT_ALIASES: dict[str, EncoderVariant] = {
    "vita": EncoderVariant.FULL,
    "rs": EncoderVariant.NO_SELECTION,
    "rs_top1": EncoderVariant.TOP1,
    "rs_sharp": EncoderVariant.SHARP,
    "ta_avg": EncoderVariant.MEAN_POOL,
    "ta_rnn": EncoderVariant.RNN,
    "ta_attn": EncoderVariant.STD_ATTENTION,
}


class HistoryFilter(str, Enum):
    """Which past visits reach the encoder as candidates."""

    ALL = "all"
    NO = "no"
    TOP1 = "top1"
    MID1 = "mid1"
    BOT1 = "bot1"

    @property
    def needs_history(self) -> bool:
        """Single-visit filters are only meaningful when a past visit exists."""
        return self in {HistoryFilter.TOP1, HistoryFilter.MID1, HistoryFilter.BOT1}

    @classmethod
    def from_str(cls, value: str) -> HistoryFilter:
        """Parse a motivation mode (case-insensitive)."""
        normalized = value.strip().lower().replace("-", "").replace(".", "")
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(
            f"Unsupported history mode '{value}'. Supported: {', '.join(m.value for m in cls)}"
        )


class PraucScoring(str, Enum):
    """Score vector used for PRAUC of a sequential decoder."""

    FIRST_STEP = "first_step"
    MEAN_STEPS = "mean_steps"


class SimilarityPartition(str, Enum):
    """Groups of past visits in the selected-visit analysis."""

    SELECTED = "selected"
    UNSELECTED = "unselected"
    ALL = "all"
