"""Token vocabularies with reserved control symbols."""

PAD, BOS, EOS, UNK, SPC = 0, 1, 2, 3, 4
RESERVED = ["<pad>", "<bos>", "<eos>", "<unk>", "<spc>"]
N_RESERVED = len(RESERVED)


class Vocab:
    """Bijective token <-> id map; unknown surfaces resolve to UNK.

    Ids 0..4 are reserved: padding, sequence start, sequence end, the
    unknown-word token, and the spacing token used for deletions (the
    spacing token renders as the empty string and is never generated
    spontaneously).
    """

    def __init__(self, tokens):
        self.tokens = list(RESERVED) + [t for t in tokens if t not in RESERVED]
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, surface):
        return surface in self.index

    def id(self, surface):
        return self.index.get(surface, UNK)

    def ids(self, surfaces):
        return [self.id(s) for s in surfaces]

    def surface(self, token_id):
        return self.tokens[token_id]

    def surfaces(self, token_ids):
        return [self.tokens[i] for i in token_ids]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        if tokens[:N_RESERVED] != RESERVED:
            raise ValueError(f"vocabulary file {path} lacks the reserved token header")
        return cls(tokens[N_RESERVED:])


def build_vocab(token_seqs, max_size, exclude=()):
    """Frequency-ranked vocabulary truncated to ``max_size`` entries.

    Reserved tokens count toward ``max_size`` and always come first;
    frequency ties break lexicographically; ``exclude`` surfaces are
    never admitted (they will map to UNK).
    """
    if max_size <= N_RESERVED:
        raise ValueError(f"max_size must exceed the {N_RESERVED} reserved tokens")
    counts = {}
    excluded = set(exclude)
    for seq in token_seqs:
        for tok in seq:
            if tok not in excluded:
                counts[tok] = counts.get(tok, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [tok for tok, _ in ranked[: max_size - N_RESERVED]]
    return Vocab(keep)


def tokenize(text):
    """Whitespace tokenization; runs of spaces collapse."""
    return text.split()


def detokenize(tokens):
    return " ".join(tokens)
