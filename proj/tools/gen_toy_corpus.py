#!/usr/bin/env python3
"""Regenerate data/corpus/*.txt, the bundled toy training corpus.

Deterministic template-generated English text, one themed document per
file, sized to roughly 60k GPT-2 tokens in total. Token counts are
measured with the byte-level BPE reference so the bundled corpus stays
the size the training smoke runs expect.

Usage: python3 tools/gen_toy_corpus.py data/gpt2/vocab.json data/gpt2/merges.txt data/corpus
"""
import os
import random
import sys

TOPICS = {
    "astronomy": {
        "nouns": ["telescope", "galaxy", "nebula", "orbit", "comet", "supernova", "planet",
                  "asteroid", "observatory", "constellation", "eclipse", "satellite", "crater",
                  "spectrum", "quasar", "pulsar", "horizon", "moon", "star", "meteor"],
        "verbs": ["observes", "orbits", "collapses", "radiates", "drifts", "expands",
                  "illuminates", "rotates", "transits", "flares"],
        "adjectives": ["distant", "luminous", "massive", "faint", "spiral", "binary",
                       "ancient", "volatile", "frozen", "radiant"],
    },
    "cooking": {
        "nouns": ["saucepan", "garlic", "onion", "broth", "dough", "oven", "spice", "butter",
                  "skillet", "recipe", "flour", "vinegar", "herb", "stew", "pastry", "yeast",
                  "ladle", "marinade", "crust", "simmer"],
        "verbs": ["simmers", "caramelizes", "whisks", "kneads", "roasts", "seasons",
                  "reduces", "folds", "garnishes", "bakes"],
        "adjectives": ["fragrant", "golden", "tender", "crisp", "savory", "zesty",
                       "buttery", "smoky", "delicate", "hearty"],
    },
    "seafaring": {
        "nouns": ["harbor", "schooner", "compass", "tide", "mast", "anchor", "lighthouse",
                  "current", "gale", "cargo", "rudder", "sailor", "chart", "buoy", "keel",
                  "voyage", "crew", "storm", "rigging", "port"],
        "verbs": ["navigates", "moors", "drifts", "charts", "weathers", "signals",
                  "tacks", "hauls", "steers", "anchors"],
        "adjectives": ["salty", "weathered", "northern", "treacherous", "calm", "foggy",
                       "swift", "heavy", "distant", "restless"],
    },
    "music": {
        "nouns": ["violin", "melody", "rhythm", "chord", "orchestra", "tempo", "harmony",
                  "cadence", "sonata", "refrain", "percussion", "overture", "pitch", "scale",
                  "ensemble", "conductor", "motif", "interval", "resonance", "encore"],
        "verbs": ["resonates", "crescendos", "harmonizes", "improvises", "modulates",
                  "rehearses", "performs", "composes", "tunes", "echoes"],
        "adjectives": ["melodic", "dissonant", "lyrical", "somber", "vibrant", "muted",
                       "baroque", "rhythmic", "haunting", "triumphant"],
    },
    "botany": {
        "nouns": ["seedling", "canopy", "pollen", "root", "fern", "orchid", "bark", "moss",
                  "petal", "sap", "meadow", "lichen", "stem", "blossom", "thicket", "grove",
                  "tendril", "foliage", "spore", "bud"],
        "verbs": ["germinates", "blossoms", "photosynthesizes", "climbs", "spreads",
                  "wilts", "flourishes", "adapts", "absorbs", "propagates"],
        "adjectives": ["verdant", "hardy", "fragile", "deciduous", "tropical", "native",
                       "flowering", "dormant", "tangled", "lush"],
    },
    "engineering": {
        "nouns": ["turbine", "girder", "circuit", "gearbox", "piston", "valve", "bridge",
                  "alloy", "bearing", "lattice", "conduit", "dynamo", "flange", "torque",
                  "blueprint", "welding", "chassis", "rivet", "gauge", "actuator"],
        "verbs": ["calibrates", "assembles", "reinforces", "transmits", "rotates",
                  "measures", "welds", "balances", "aligns", "tolerances"],
        "adjectives": ["structural", "hydraulic", "tempered", "precise", "redundant",
                       "load-bearing", "corroded", "efficient", "modular", "robust"],
    },
    "weather": {
        "nouns": ["thunderstorm", "drizzle", "frost", "humidity", "breeze", "hailstone",
                  "forecast", "barometer", "cloudbank", "downpour", "snowfall", "heatwave",
                  "fogbank", "gust", "rainbow", "drought", "blizzard", "dew", "overcast", "squall"],
        "verbs": ["gathers", "dissipates", "intensifies", "lingers", "sweeps", "chills",
                  "saturates", "clears", "freezes", "thaws"],
        "adjectives": ["torrential", "mild", "biting", "humid", "brisk", "unsettled",
                       "seasonal", "arid", "turbulent", "gentle"],
    },
    "archaeology": {
        "nouns": ["artifact", "excavation", "pottery", "ruin", "inscription", "tomb",
                  "sediment", "relic", "mosaic", "amphora", "stratum", "temple", "scroll",
                  "fresco", "catacomb", "trench", "shard", "monument", "quarry", "archive"],
        "verbs": ["unearths", "catalogs", "restores", "deciphers", "excavates", "dates",
                  "preserves", "surveys", "documents", "reconstructs"],
        "adjectives": ["ancient", "buried", "ceremonial", "weathered", "intact", "fragmentary",
                       "ornate", "sacred", "forgotten", "monumental"],
    },
}

TEMPLATES = [
    "The {adj} {noun} {verb} beside the {noun2}.",
    "Every {noun} {verb} when the {adj} {noun2} appears.",
    "A {adj} {noun} rarely {verb_base} without its {noun2}.",
    "Researchers found that the {noun} {verb} near the {adj} {noun2}.",
    "In早 practice, a {noun} {verb} long before any {noun2}.",
    "No {noun} ever {verb} unless the {noun2} is {adj}.",
    "The {noun} and the {noun2} together seem {adj}.",
    "After the {noun} {verb}, the {adj} {noun2} followed.",
    "People often describe the {noun} as {adj}, yet it {verb} anyway.",
    "Between the {noun} and the {noun2} lies something {adj}.",
    "Yesterday the {adj} {noun} finally {verb} past the {noun2}.",
    "Some say the {noun} {verb}; others watch the {adj} {noun2}.",
]


def make_sentence(rng, bank):
    template = rng.choice(TEMPLATES).replace("早", "")
    noun, noun2 = rng.sample(bank["nouns"], 2)
    return template.format(
        noun=noun, noun2=noun2,
        verb=rng.choice(bank["verbs"]),
        verb_base=rng.choice(bank["verbs"]).rstrip("s"),
        adj=rng.choice(bank["adjectives"]),
    )


def main():
    vocab_path, merges_path, out_dir = sys.argv[1], sys.argv[2], sys.argv[3]
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from make_tokenizer_fixtures import ReferenceEncoder
    import json
    vocab = json.load(open(vocab_path, encoding="utf-8"))
    merge_lines = open(merges_path, encoding="utf-8").read().split("\n")
    merges = [tuple(l.split()) for l in merge_lines[1:] if l.strip()]
    enc = ReferenceEncoder(vocab, merges)

    rng = random.Random(7151)
    os.makedirs(out_dir, exist_ok=True)
    total_tokens = 0
    for idx, (topic, bank) in enumerate(sorted(TOPICS.items())):
        sentences = [make_sentence(rng, bank) for _ in range(560)]
        paragraphs = []
        i = 0
        while i < len(sentences):
            k = rng.randrange(3, 7)
            paragraphs.append(" ".join(sentences[i:i + k]))
            i += k
        text = "\n\n".join(paragraphs) + "\n"
        path = os.path.join(out_dir, f"doc{idx:02d}_{topic}.txt")
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        n = len(enc.encode(text))
        total_tokens += n
        print(f"{path}: {n} tokens", file=sys.stderr)
    print(f"total: {total_tokens} tokens", file=sys.stderr)


if __name__ == "__main__":
    main()
