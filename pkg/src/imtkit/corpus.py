"""Synthetic parallel corpora with discourse-like sessions.

Source sentences are random draws from per-session topic subsets of an
artificial vocabulary; targets are produced by a deterministic
word-level rule (dictionary substitution plus local reordering), with
optional stochastic-but-seeded noise insertions so a trained model
generalizes imperfectly.  Each session carries designated rare words
that recur within the session but are excluded from any vocabulary
built over the corpus, so they surface as UNK.
"""

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .vocab import build_vocab

RULES = ("swap_dict_noise", "reverse_dict")


@dataclass
class SyntheticSpec:
    seed: int = 0
    src_vocab_size: int = 80
    tgt_vocab_size: int = 80
    len_range: tuple = (5, 9)
    n_sessions: int = 10
    sentences_per_session: int = 20
    rare_per_session: int = 1
    rare_repetition: int = 3
    rule: str = "swap_dict_noise"
    noise_rate: float = 0.05
    exception_words: int = 0

    def validate(self):
        if self.src_vocab_size < 8 or self.tgt_vocab_size < 8:
            raise ValueError("vocab sizes must be at least 8")
        lo, hi = self.len_range
        if lo < 3 or hi < lo:
            raise ValueError(f"bad sentence length range {self.len_range}")
        if self.n_sessions < 1 or self.sentences_per_session < 1:
            raise ValueError("need at least one session and one sentence per session")
        if self.rare_per_session < 0 or (self.rare_per_session and self.rare_repetition < 2):
            raise ValueError("rare repetition factor must be >= 2")
        if self.rule not in RULES:
            raise ValueError(f"unknown transformation rule {self.rule!r}")
        if not 0.0 <= self.noise_rate < 0.5:
            raise ValueError("noise rate must be in [0, 0.5)")
        if self.rare_repetition > self.sentences_per_session:
            raise ValueError("rare repetition exceeds sentences per session")

    def to_json(self):
        d = asdict(self)
        d["len_range"] = list(self.len_range)
        return d

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        if "len_range" in d:
            d["len_range"] = tuple(d["len_range"])
        return cls(**d)


@dataclass
class ParallelCorpus:
    pairs: list  # [(src_tokens, tgt_tokens)]
    sessions: list  # [(start_index, length)]
    rare_words: list = field(default_factory=list)  # surfaces to exclude from vocabs

    def session_pairs(self, k):
        start, length = self.sessions[k]
        return self.pairs[start : start + length]

    def __len__(self):
        return len(self.pairs)


MARKER = "s000"  # fixed in-vocab word preceding every rare word


def _apply_rule(spec, dictionary, src_tokens, rng):
    if spec.rule == "reverse_dict":
        return [dictionary.get(w, w) for w in reversed(src_tokens)]
    # swap_dict_noise: per-word dictionary, then swap adjacent pairs,
    # then seeded noise insertions
    tgt = [dictionary.get(w, w) for w in src_tokens]
    for i in range(0, len(tgt) - 1, 2):
        tgt[i], tgt[i + 1] = tgt[i + 1], tgt[i]
    if spec.noise_rate > 0:
        out = []
        noise_pool = [v for v in dictionary.values() if not v.startswith("ZZ")]
        for tok in tgt:
            if rng.random() < spec.noise_rate:
                out.append(noise_pool[rng.integers(len(noise_pool))])
            out.append(tok)
        tgt = out
    return tgt


def generate(spec):
    """Deterministic corpus generation from a SyntheticSpec."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)

    src_words = [f"s{i:03d}" for i in range(spec.src_vocab_size)]
    tgt_words = [f"t{i:03d}" for i in range(spec.tgt_vocab_size)]
    perm = rng.permutation(spec.tgt_vocab_size)
    dictionary = {src_words[i]: tgt_words[perm[i % spec.tgt_vocab_size]] for i in range(spec.src_vocab_size)}

    pairs = []
    sessions = []
    rare_words = []
    lo, hi = spec.len_range
    for s in range(spec.n_sessions):
        srng = np.random.default_rng(spec.seed * 1_000_003 + 17 * s + 1)
        topic_size = max(6, int(0.6 * spec.src_vocab_size))
        topic = [src_words[i] for i in srng.permutation(spec.src_vocab_size)[:topic_size]]
        if MARKER in topic:
            topic.remove(MARKER)

        sess_dict = dict(dictionary)
        exception_from = [w for w in topic[: spec.exception_words]]
        for w in exception_from:
            alt = tgt_words[int(srng.integers(spec.tgt_vocab_size))]
            while alt == dictionary[w]:
                alt = tgt_words[int(srng.integers(spec.tgt_vocab_size))]
            sess_dict[w] = alt

        rares = [f"zz{s:02d}x{k}" for k in range(spec.rare_per_session)]
        for k, r in enumerate(rares):
            sess_dict[r] = f"ZZ{s:02d}x{k}"
        rare_words.extend(rares)
        rare_words.extend(sess_dict[r] for r in rares)

        # which sentences carry which rare word
        carriers = {}
        for r in rares:
            rows = srng.choice(spec.sentences_per_session, size=spec.rare_repetition, replace=False)
            for row in rows:
                carriers.setdefault(int(row), []).append(r)

        start = len(pairs)
        for j in range(spec.sentences_per_session):
            length = int(srng.integers(lo, hi + 1))
            words = [topic[int(srng.integers(len(topic)))] for _ in range(length)]
            for r in carriers.get(j, []):
                slot = int(srng.integers(0, len(words)))
                words[slot : slot + 1] = [MARKER, r]
            tgt = _apply_rule(spec, sess_dict, words, srng)
            pairs.append((words, tgt))
        sessions.append((start, spec.sentences_per_session))

    return ParallelCorpus(pairs=pairs, sessions=sessions, rare_words=sorted(set(rare_words)))


def build_vocabs(corpus, src_max, tgt_max):
    """Frequency vocabularies for both sides, rare inventory excluded."""
    exclude = set(corpus.rare_words)
    src = build_vocab((p[0] for p in corpus.pairs), src_max, exclude=exclude)
    tgt = build_vocab((p[1] for p in corpus.pairs), tgt_max, exclude=exclude)
    return src, tgt


def write_corpus(corpus, outdir, prefix):
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, prefix + ".src"), "w", encoding="utf-8") as fh:
        for src, _ in corpus.pairs:
            fh.write(" ".join(src) + "\n")
    with open(os.path.join(outdir, prefix + ".tgt"), "w", encoding="utf-8") as fh:
        for _, tgt in corpus.pairs:
            fh.write(" ".join(tgt) + "\n")
    with open(os.path.join(outdir, prefix + ".sessions"), "w", encoding="utf-8") as fh:
        for start, length in corpus.sessions:
            fh.write(f"{start}\t{length}\n")
    with open(os.path.join(outdir, prefix + ".rare.txt"), "w", encoding="utf-8") as fh:
        for w in corpus.rare_words:
            fh.write(w + "\n")


def read_corpus(outdir, prefix):
    def lines(name):
        with open(os.path.join(outdir, prefix + name), encoding="utf-8") as fh:
            return [line.rstrip("\n") for line in fh]

    src = [line.split() for line in lines(".src")]
    tgt = [line.split() for line in lines(".tgt")]
    if len(src) != len(tgt):
        raise ValueError("source/target files are not line-aligned")
    sessions = []
    for line in lines(".sessions"):
        if line:
            start, length = line.split("\t")
            sessions.append((int(start), int(length)))
    rare_path = os.path.join(outdir, prefix + ".rare.txt")
    rare = []
    if os.path.exists(rare_path):
        with open(rare_path, encoding="utf-8") as fh:
            rare = [line.strip() for line in fh if line.strip()]
    return ParallelCorpus(pairs=list(zip(src, tgt)), sessions=sessions, rare_words=rare)


def write_spec(spec_or_dict, path):
    data = spec_or_dict.to_json() if isinstance(spec_or_dict, SyntheticSpec) else spec_or_dict
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_spec(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
