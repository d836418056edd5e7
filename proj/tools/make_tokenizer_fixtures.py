#!/usr/bin/env python3
"""Regenerate tests/data/tokenizer_cases.json.

Runs two independent GPT-2 tokenizer references over a mixed bag of texts
and freezes their (agreeing) token ids as the conformance fixture:
  1. the HuggingFace `tokenizers` byte-level BPE backend,
  2. a direct port of the original byte-level BPE encode procedure.
Any disagreement aborts fixture generation.

Usage: python3 tools/make_tokenizer_fixtures.py data/gpt2/vocab.json \
           data/gpt2/merges.txt > tests/data/tokenizer_cases.json
"""
import json
import random
import sys

import regex as re
from tokenizers import Tokenizer, decoders, pre_tokenizers
from tokenizers.models import BPE


def bytes_to_unicode():
    bs = list(range(ord("!"), ord("~") + 1)) + list(range(0xA1, 0xAC + 1)) + list(range(0xAE, 0xFF + 1))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, [chr(c) for c in cs]))


class ReferenceEncoder:
    """Straight port of the original byte-level BPE encode loop."""

    def __init__(self, vocab, merges):
        self.encoder = vocab
        self.byte_encoder = bytes_to_unicode()
        self.bpe_ranks = dict(zip(merges, range(len(merges))))
        self.pat = re.compile(
            r"""'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+""")

    def bpe(self, token):
        word = tuple(token)
        if len(word) < 2:
            return [token] if token else []
        while True:
            pairs = set(zip(word[:-1], word[1:]))
            bigram = min(pairs, key=lambda p: self.bpe_ranks.get(p, float("inf")))
            if bigram not in self.bpe_ranks:
                break
            first, second = bigram
            new_word, i = [], 0
            while i < len(word):
                try:
                    j = word.index(first, i)
                except ValueError:
                    new_word.extend(word[i:])
                    break
                new_word.extend(word[i:j])
                i = j
                if word[i] == first and i < len(word) - 1 and word[i + 1] == second:
                    new_word.append(first + second)
                    i += 2
                else:
                    new_word.append(word[i])
                    i += 1
            word = tuple(new_word)
            if len(word) == 1:
                break
        return list(word)

    def encode(self, text):
        ids = []
        for piece in re.findall(self.pat, text):
            mapped = "".join(self.byte_encoder[b] for b in piece.encode("utf-8"))
            ids.extend(self.encoder[t] for t in self.bpe(mapped))
        return ids


HAND_CASES = [
    "Hello world", "Hello, world!", "hello world", " Hello world ",
    "", " ", "  ", "   ", "\t", "\n", "\r\n", " \t\n ",
    "a", "A", "z ", " z", "I", "0", "9",
    "don't", "don't stop", "I'll be there", "you've got it", "it's", "we're", "I'm", "they'd",
    "'s 't 're 've 'm 'll 'd", "rock 'n' roll", "'Tis the season", "O'Brien's",
    "a   b\t\tc  ", "x  y", "tabs\tand\nnewlines\r\nhere", "   leading", "trailing   ",
    "double  spaces   triple", "word\u00a0nbsp", "line\u2028sep",
    "123", "3.14159", "1,000,000", "42 is the answer", "year 2024", "v2.0.1", "0x1F",
    "1st 2nd 3rd 4th", "80's", "$100", "50%", "#1", "№5",
    "ALLCAPS", "MixedCase", "camelCaseIdentifier", "snake_case_name", "kebab-case-name",
    "hyphen-ated", "co-operate", "re-enter", "state-of-the-art",
    "punctuation!!!", "really???", "wait... what?!", "(parentheses)", "[brackets]", "{braces}",
    "<angle>", "a&b", "c|d", "e^f", "g~h", "semi;colon", "back\\slash", "forward/slash",
    "\"double quotes\"", "'single quotes'", "\u201ccurly quotes\u201d", "\u2018single curly\u2019",
    "em\u2014dash", "en\u2013dash", "ellipsis\u2026", "bullet \u2022 point",
    "naïve café résumé", "Zürich über straße", "français español português",
    "Ελληνικά", "Русский язык", "中文测试", "日本語のテスト", "한국어 테스트",
    "العربية", "עברית", "हिन्दी", "ไทย", "ខ្មែរ",
    "mixed English și română", "Tokyo 東京 mix", "über cool 123",
    "🦀", "🔥🔥🔥", "emoji 🎉 party", "👩‍👩‍👧‍👦 family", "thumbs 👍🏽 up", "flag 🇺🇸 here",
    "𝄞 musical clef", "math 𝔸𝔹ℂ", "zalgo z̸̢̛a̶͝l̵̈g̶̈o̷̕",
    "e\u0301 combining acute", "a\u030a ring", "\u00e9 precomposed",
    "soft\u00adhyphen", "zero\u200bwidth", "RTL \u202eforced\u202c text",
    "Ω ω Alpha α", "ß sharp s", "Æ æ ligature", "Œ œ",
    "superscript x² y³", "fraction ½ ¾", "roman Ⅻ ⅷ", "circled ① ②",
    "const auto x = f(y);", "def foo(bar): return baz", "SELECT * FROM users WHERE id=1;",
    "printf(\"%d\\n\", x);", "<html><body>hi</body></html>", "{\"json\": [1, 2, 3]}",
    "path/to/file.txt", "C:\\Windows\\System32", "https://example.com/page?q=1&r=2",
    "user@example.com", "192.168.0.1", "::1",
    "The quick brown fox jumps over the lazy dog.",
    "Pack my box with five dozen liquor jugs.",
    "How vexingly quick daft zebras jump!",
    "Sphinx of black quartz, judge my vow.",
    "  Indented code block\n    deeper indent\n",
    "First line.\nSecond line.\n\nFourth line after blank.",
    "A very long compound word: Donaudampfschifffahrtsgesellschaftskapitän",
    "antidisestablishmentarianism supercalifragilisticexpialidocious",
    "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa", "abababababababababab",
    "!@#$%^&*()_+-=[]{}|;':,./<>?", "¡¿§¶†‡", "±×÷≈≠≤≥", "∀∃∈∉∑∏∫",
    "Multiple   spaces   between   every   word",
    "\ttab indented\tcolumns\there",
    "Ends with apostrophe'", "'Starts with apostrophe",
    "CamelCase123Number", "abc123def456", "123abc456def",
    "underscore _ alone", "dot . alone", "comma , alone",
]


def random_cases(rng, vocab_words, n):
    unicode_pool = ["é", "ü", "ß", "中", "日", "한", "α", "я", "🦀", "🎉", "½", "²",
                    "\u00a0", "\u200b", "𝄞", "ñ", "ç", "ø", "ع", "ह"]
    whitespace_pool = [" ", "  ", "\t", "\n", " \t", "\r\n"]
    cases = []
    for _ in range(n):
        kind = rng.randrange(4)
        if kind == 0:
            words = [rng.choice(vocab_words) for _ in range(rng.randrange(1, 12))]
            text = " ".join(words)
        elif kind == 1:
            parts = []
            for _ in range(rng.randrange(2, 10)):
                r = rng.random()
                if r < 0.5:
                    parts.append(rng.choice(vocab_words))
                elif r < 0.75:
                    parts.append(rng.choice(unicode_pool))
                else:
                    parts.append(str(rng.randrange(0, 99999)))
                parts.append(rng.choice(whitespace_pool))
            text = "".join(parts)
        elif kind == 2:
            text = "".join(chr(rng.choice([rng.randrange(32, 127), rng.randrange(0xA0, 0x2FF),
                                           rng.randrange(0x370, 0x4FF)]))
                           for _ in range(rng.randrange(1, 40)))
        else:
            words = [rng.choice(vocab_words) for _ in range(rng.randrange(1, 6))]
            text = rng.choice(["", " "]) + "'".join(words) + rng.choice(["!", "...", "?!", " "])
        cases.append(text)
    return cases


def main():
    vocab_path, merges_path = sys.argv[1], sys.argv[2]
    vocab = json.load(open(vocab_path, encoding="utf-8"))
    merge_lines = open(merges_path, encoding="utf-8").read().split("\n")
    merges = [tuple(l.split()) for l in merge_lines[1:] if l.strip()]

    ref = ReferenceEncoder(vocab, merges)
    hf = Tokenizer(BPE.from_file(vocab_path, merges_path))
    hf.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False, use_regex=True)
    hf.decoder = decoders.ByteLevel()

    rng = random.Random(20240817)
    words = ["the", "quick", "brown", "fox", "data", "model", "train", "test", "hello",
             "world", "science", "music", "river", "mountain", "language", "token",
             "embedding", "network", "simple", "complex", "Paris", "London", "history",
             "quantum", "classical", "running", "jumped", "beautiful", "strange"]
    texts = HAND_CASES + random_cases(rng, words, 200 - len(HAND_CASES))
    assert len(texts) == 200, len(texts)

    fixtures = []
    for text in texts:
        a = ref.encode(text)
        b = hf.encode(text, add_special_tokens=False).ids
        if a != b:
            print(f"REFERENCE DISAGREEMENT on {text!r}: {a} vs {b}", file=sys.stderr)
            sys.exit(1)
        fixtures.append({"text": text, "ids": a})

    json.dump(fixtures, sys.stdout, ensure_ascii=False, indent=1)
    sys.stdout.write("\n")
    print(f"wrote {len(fixtures)} cases, all dual-verified", file=sys.stderr)


if __name__ == "__main__":
    main()
