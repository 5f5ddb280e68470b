"""Social-media text cleaning.

Removes, in order: @mentions, #hashtags (the whole token by default), URLs
(``http://``, ``https://`` and ``www.`` forms) and emoji. Each removed span is
replaced by a space before whitespace is collapsed, so removal never glues two
neighbouring fragments together. Removal repeats until the text stops
changing, which makes the function idempotent.

Emoji are matched by these Unicode ranges:

    U+1F000-U+1FAFF  pictographs, emoticons, transport, flags, extended-A
    U+2300-U+23FF    misc technical (watch, hourglass, ...)
    U+2600-U+27BF    misc symbols and dingbats
    U+2B00-U+2BFF    arrows and geometric symbols (stars, circles)
    U+FE00-U+FE0F    variation selectors
    U+200D           zero width joiner
    U+20E3           combining enclosing keycap
    U+E0020-U+E007F  tag characters (subdivision flags)
"""

import re

MENTION_RE = re.compile(r"(?<!\w)@\w+")
HASHTAG_RE = re.compile(r"(?<!\w)#\w+")
HASH_SYMBOL_RE = re.compile(r"(?<!\w)#(?=\w)")
URL_RE = re.compile(r"(?:\bhttps?://|\bwww\.)\S*", re.IGNORECASE)
EMOJI_RE = re.compile(
    "["
    "\U0001F000-\U0001FAFF"
    "\u2300-\u23ff"
    "\u2600-\u27bf"
    "\u2b00-\u2bff"
    "\ufe00-\ufe0f"
    "\u200d"
    "\u20e3"
    "\U000E0020-\U000E007F"
    "]+"
)
_WS_RE = re.compile(r"\s+")


def _clean_once(text, strip_hashtag_symbol_only):
    text = MENTION_RE.sub(" ", text)
    if strip_hashtag_symbol_only:
        text = HASH_SYMBOL_RE.sub(" ", text)
    else:
        text = HASHTAG_RE.sub(" ", text)
    text = URL_RE.sub(" ", text)
    text = EMOJI_RE.sub(" ", text)
    return _WS_RE.sub(" ", text).strip()


def clean_text(raw, strip_hashtag_symbol_only=False):
    """Strip mentions, hashtags, URLs and emoji; collapse whitespace."""
    # a removal can expose a new match ("@a@b" leaves "@b"), so run to a fixed point
    text = _clean_once(raw, strip_hashtag_symbol_only)
    while True:
        again = _clean_once(text, strip_hashtag_symbol_only)
        if again == text:
            return text
        text = again
