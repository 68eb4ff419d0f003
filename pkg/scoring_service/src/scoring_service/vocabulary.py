"""Closed word lists shared by the model bootstrap and the mini corpus.

The tiny backend models use a word-level tokenizer over exactly these
words (plus specials and punctuation), so everything the demo corpus can
emit is in-vocabulary.
"""

GOLD_SUBJECTS = [
    "weaver", "miner", "baker", "cooper", "mason", "tanner", "fletcher",
    "chandler", "glazier", "potter", "smith", "farmer", "sailor", "merchant",
    "scholar", "hunter", "carver", "brewer", "shepherd", "fisher", "tailor",
    "roper", "thatcher", "saddler", "turner", "wheeler", "carter", "porter",
    "miller", "draper", "dyer", "furrier", "gilder", "joiner", "cobbler",
    "printer", "binder", "etcher", "engraver", "armorer", "bowyer", "cutler",
    "founder", "lorimer", "nailer", "plumber", "salter", "skinner", "spinner",
    "wainwright", "falconer", "gardener", "herbalist", "limner", "mercer",
    "pewterer",
]

BACKGROUND_SUBJECTS = [
    "traveler", "visitor", "stranger", "neighbor", "family", "crowd",
    "child", "elder", "guest", "clerk",
]

VERBS = [
    "stored", "carried", "repaired", "traded", "gathered", "shipped",
    "counted", "stacked", "cleaned", "weighed", "wrapped", "moved",
    "sorted", "guarded", "delivered",
]

MATERIALS = [
    "copper", "clay", "iron", "oak", "woven", "dried", "salted", "carved",
    "painted", "glass", "silver", "wool", "linen", "amber", "pine",
]

OBJECTS = [
    "tools", "jars", "nails", "barrels", "baskets", "figs", "ropes",
    "tiles", "lamps", "combs", "bells", "crates", "hooks", "planks", "beads",
]

PLACE_FIRST = [
    "harbor", "river", "hill", "stone", "grain", "coastal", "market",
    "north", "south", "garden",
]

PLACE_SECOND = [
    "dock", "village", "bridge", "mill", "town", "square", "gate",
    "tower", "yard", "lane",
]

FILLERS = [
    "the", "a", "at", "near", "beside", "it", "was", "and", "then",
    "every", "morning", "under", "behind", "again", "often", "late",
    "busy", "quiet", "small", "old", "saw", "stayed", "kept", "found",
]

QUESTION_WORDS = ["who", "what", "where", "which", "did"]

INSTRUCTION_WORDS = [
    "please", "write", "question", "based", "on", "this", "passage", "for",
]

PUNCTUATION = [".", ",", ":", "?", ";"]


def all_words() -> list[str]:
    seen: set[str] = set()
    words: list[str] = []
    for group in (
        GOLD_SUBJECTS, BACKGROUND_SUBJECTS, VERBS, MATERIALS, OBJECTS,
        PLACE_FIRST, PLACE_SECOND, FILLERS, QUESTION_WORDS,
        INSTRUCTION_WORDS, PUNCTUATION,
    ):
        for word in group:
            if word not in seen:
                seen.add(word)
                words.append(word)
    return words
