"""
Closed symbolic vocabulary for referring expressions.

Token ids are positions in ``TOKENS``; the order is part of the dataset
format: existing ids never move and new tokens go at the end.
"""

from collections.abc import Sequence

from chuk_grounding.errors import VocabularyError

# ============================================================================
# CLASS VOCABULARY
# ============================================================================

COLORS: dict[str, str] = {
    "red": "#ef4444",
    "orange": "#f97316",
    "yellow": "#eab308",
    "green": "#22c55e",
    "blue": "#3b82f6",
    "purple": "#a855f7",
    "pink": "#ec4899",
    "brown": "#92400e",
    "white": "#f1f5f9",
    "black": "#0f172a",
}

# Clutter points are drawn in this color; it is not a class color.
FLOOR_COLOR = "#64748b"

# Shape name -> box aspect (x, y, z) relative to the sampled base edge.
SHAPES: dict[str, tuple[float, float, float]] = {
    "cube": (1.0, 1.0, 1.0),
    "pillar": (0.6, 0.6, 2.0),
    "slab": (1.6, 1.6, 0.35),
    "bar": (2.2, 0.5, 0.5),
    "plank": (0.5, 2.2, 0.4),
}

RELATIONS: tuple[str, ...] = (
    "leftmost",
    "rightmost",
    "nearest",
    "largest",
    "smallest",
    "frontmost",
    "backmost",
    "tallest",
    "shortest",
)

ANY_SHAPE = "object"

TOKENS: tuple[str, ...] = (
    *("red", "orange", "yellow", "green", "blue", "purple"),
    *SHAPES,
    *("leftmost", "rightmost", "nearest", "largest", "smallest"),
    ANY_SHAPE,
    *("pink", "brown", "white", "black"),
    *("frontmost", "backmost", "tallest", "shortest"),
)
TOKEN_IDS: dict[str, int] = {name: i for i, name in enumerate(TOKENS)}
VOCAB_SIZE = len(TOKENS)


def hex_to_rgb(hex_color: str) -> tuple[float, float, float]:
    """Convert a hex color to an RGB tuple in [0, 1]."""
    hex_color = hex_color.lstrip("#")
    return tuple(int(hex_color[i : i + 2], 16) / 255.0 for i in (0, 2, 4))  # type: ignore


def encode_tokens(names: Sequence[str]) -> list[int]:
    """
    Map token names to ids.

    Raises:
        VocabularyError: If a name is not in the vocabulary
    """
    ids = []
    for name in names:
        if name not in TOKEN_IDS:
            raise VocabularyError(f"Unknown token '{name}'. Vocabulary: {', '.join(TOKENS)}")
        ids.append(TOKEN_IDS[name])
    return ids


def decode_tokens(ids: Sequence[int]) -> list[str]:
    names = []
    for token in ids:
        if not 0 <= int(token) < VOCAB_SIZE:
            raise VocabularyError(f"Token id {token} outside vocabulary of size {VOCAB_SIZE}")
        names.append(TOKENS[int(token)])
    return names


def anonymize_expression(ids: Sequence[int]) -> list[int]:
    """Replace the referent's shape token (the first shape token) with ``object``."""
    out = [int(token) for token in ids]
    for i, name in enumerate(decode_tokens(out)):
        if name in SHAPES:
            out[i] = TOKEN_IDS[ANY_SHAPE]
            break
    return out
