#!/usr/bin/env python3
"""Generate the offline-evaluation fixture set and its golden reports.

The dataset has three personas (A: 266 items, B: 169, C: 38). For every
ablation the script chooses which items each configuration blocks so that the
per-persona confusion counts equal the target tables below, then writes:

  dataset.jsonl   labelled feed items, one per line
  rules.json      the filter rule set
  replay.json     recorded judge decisions per item and call signature
  images.jsonl    caption and visual evidence per image reference
  config.json     eval config tying the files together
  golden/<ablation>.json and .txt   expected reports

Goldens are computed here with exact rational arithmetic, independently of the
C++ metric code, and the derived precision/recall/F1 are checked against the
reference figures before anything is written.

Usage: make_eval_fixtures.py <output dir>
"""

import json
import random
import sys
from fractions import Fraction
from pathlib import Path

PERSONAS = ("A", "B", "C")
SIZES = {"A": 266, "B": 169, "C": 38}
POSITIVES = {"A": 39, "B": 38, "C": 15}

# (tp, fp, tn, fn) per persona and ablation.
TARGETS = {
    "keyword_baseline": {"A": (6, 26, 201, 33), "B": (9, 31, 100, 29), "C": (4, 6, 17, 11)},
    "text_only_baseline": {"A": (32, 109, 118, 7), "B": (25, 81, 50, 13), "C": (11, 12, 11, 4)},
    "remove_ma": {"A": (34, 200, 27, 5), "B": (33, 104, 27, 5), "C": (13, 20, 3, 2)},
    "remove_image": {"A": (5, 3, 224, 34), "B": (5, 2, 129, 33), "C": (3, 1, 22, 12)},
    "full": {"A": (34, 29, 198, 5), "B": (33, 16, 115, 5), "C": (13, 7, 16, 2)},
}

# Reference (precision, recall, f1) the derived metrics must reproduce.
REFERENCE_OVERALL = {
    "keyword_baseline": ("0.2317", "0.2065", "0.2184"),
    "text_only_baseline": ("0.2519", "0.7391", "0.3757"),
    "remove_ma": ("0.1980", "0.8696", "0.3226"),
    "remove_image": ("0.6842", "0.1413", "0.2342"),
    "full": ("0.6061", "0.8696", "0.7143"),
}
REFERENCE_PERSONA = {
    ("keyword_baseline", "A"): ("0.1875", "0.1538", "0.1690"),
    ("text_only_baseline", "A"): ("0.2270", "0.8205", "0.3556"),
    ("full", "A"): ("0.5397", "0.8718", "0.6667"),
    ("keyword_baseline", "B"): ("0.2250", "0.2368", "0.2308"),
    ("text_only_baseline", "B"): ("0.2358", "0.6579", "0.3472"),
    ("full", "B"): ("0.6735", "0.8684", "0.7586"),
    ("keyword_baseline", "C"): ("0.4000", "0.2667", "0.3200"),
    ("text_only_baseline", "C"): ("0.4783", "0.7333", "0.5789"),
    ("full", "C"): ("0.6500", "0.8667", "0.7429"),
}

# Replay signature for each judge-driven ablation.
SIGNATURES = {
    "full": "decoupled_visual",
    "remove_image": "decoupled_text",
    "remove_ma": "monolithic_visual",
    "text_only_baseline": "monolithic_text",
}

RULES = [
    {"id": "rule_astrology", "description": "Hide astrology and horoscope fortune telling",
     "weight": -0.9, "modality": "image_text", "core_entities": ["horoscope", "zodiac"]},
    {"id": "rule_gambling", "description": "Hide lottery and gambling promotions",
     "weight": -0.8, "modality": "image_text", "core_entities": ["lottery", "casino"]},
    {"id": "rule_diet_pills", "description": "Hide miracle slimming pill advertising",
     "weight": -0.6, "modality": "image_text", "core_entities": ["slimming pill"]},
]

NEUTRAL_WORDS = ["weekend", "notes", "garden", "recipe", "travel", "morning", "study", "city",
                 "walk", "coffee", "museum", "review", "sketch", "river", "market", "music"]


def check_counts():
    for ablation, per in TARGETS.items():
        for p in PERSONAS:
            tp, fp, tn, fn = per[p]
            assert tp + fn == POSITIVES[p], (ablation, p)
            assert fp + tn == SIZES[p] - POSITIVES[p], (ablation, p)


def round4(value):
    """Half-away-from-zero rounding of a non-negative Fraction to 4 places."""
    scaled = value * 10000
    return Fraction(int(scaled + Fraction(1, 2)), 10000)


def metrics(tp, fp, tn, fn):
    precision = Fraction(tp, tp + fp) if tp + fp else None
    recall = Fraction(tp, tp + fn) if tp + fn else None
    f1 = None
    if precision is not None and recall is not None and precision + recall:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def as_number(value):
    return None if value is None else float(round4(value))


def as_text(value):
    return "-" if value is None else "%.4f" % float(round4(value))


def check_reference():
    for ablation, per in TARGETS.items():
        total = [sum(per[p][i] for p in PERSONAS) for i in range(4)]
        got = tuple(as_text(v) for v in metrics(*total))
        assert got == REFERENCE_OVERALL[ablation], (ablation, got)
    for (ablation, p), expected in REFERENCE_PERSONA.items():
        got = tuple(as_text(v) for v in metrics(*TARGETS[ablation][p]))
        assert got == expected, (ablation, p, got)


def report_json(ablation, rows):
    def block(n, c):
        precision, recall, f1 = metrics(*c)
        return {"n": n, "tp": c[0], "fp": c[1], "tn": c[2], "fn": c[3],
                "precision": as_number(precision), "recall": as_number(recall), "f1": as_number(f1)}

    overall = [sum(rows[p][i] for p in PERSONAS) for i in range(4)]
    return {"ablation": ablation, "n": sum(SIZES.values()),
            "overall": block(sum(SIZES.values()), overall),
            "personas": {p: block(SIZES[p], rows[p]) for p in PERSONAS}}


def report_text(ablation, rows):
    def line(scope, n, c):
        precision, recall, f1 = metrics(*c)
        return "%-10s %5d " % (scope, n) + "%6d %6d %6d %6d %10s %8s %9s" % (
            c[0], c[1], c[2], c[3], as_text(precision), as_text(recall), as_text(f1)) + "\n"

    out = "Ablation: %s\n" % ablation
    out += "%-10s %5s %6s %6s %6s %6s %10s %8s %9s\n" % (
        "Scope", "N", "TP", "FP", "TN", "FN", "Precision", "Recall", "F1")
    overall = [sum(rows[p][i] for p in PERSONAS) for i in range(4)]
    out += line("Overall", sum(SIZES.values()), overall)
    for p in PERSONAS:
        out += line("Persona " + p, SIZES[p], rows[p])
    return out


def choose_blocks(rng):
    """Per ablation, the set of item ids it blocks."""
    blocked = {a: set() for a in TARGETS}
    items = []
    for p in PERSONAS:
        ids = ["%s-%04d" % (p.lower(), i + 1) for i in range(SIZES[p])]
        positives = ids[:POSITIVES[p]]
        negatives = ids[POSITIVES[p]:]
        for i, item_id in enumerate(ids):
            items.append((item_id, p, 1 if i < POSITIVES[p] else 0))
        for ablation, per in TARGETS.items():
            tp, fp, _, _ = per[p]
            blocked[ablation].update(rng.sample(positives, tp))
            blocked[ablation].update(rng.sample(negatives, fp))
    return items, blocked


def neutral_title(rng, item_id):
    words = rng.sample(NEUTRAL_WORDS, 3)
    return "Post %s: %s" % (item_id, " ".join(words))


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    out = Path(sys.argv[1])
    (out / "golden").mkdir(parents=True, exist_ok=True)

    check_counts()
    check_reference()
    rng = random.Random(473)
    items, blocked = choose_blocks(rng)

    entities = [(r["id"], e) for r in RULES for e in r["core_entities"]]
    dataset_lines, image_lines, replay = [], [], {}
    for n, (item_id, persona, truth) in enumerate(items):
        title = neutral_title(rng, item_id)
        if item_id in blocked["keyword_baseline"]:
            _, entity = entities[n % len(entities)]
            title += " with " + entity
        lowered = title.lower()
        hits = [e for _, e in entities if e in lowered]
        assert bool(hits) == (item_id in blocked["keyword_baseline"]), item_id
        image_ref = "img-" + item_id
        dataset_lines.append(json.dumps({
            "id": item_id, "title": title, "snippet": None, "snippet_truncated": False,
            "image_ref": image_ref, "tags": ["persona_" + persona.lower()],
            "persona": persona, "ground_truth": truth}, sort_keys=True))
        image_lines.append(json.dumps({
            "image_ref": image_ref,
            "caption": "photo for %s" % item_id,
            "evidence": {"perception": {"image_quality": "clear", "brightness": "normal"},
                         "cognition": {"subjects": "scene for %s" % item_id},
                         "semantics": {"scene": "everyday", "vibe": "neutral"}}}, sort_keys=True))
        decisions = {}
        for ablation, signature in SIGNATURES.items():
            rule = RULES[n % len(RULES)]["id"]
            decisions[signature] = rule if item_id in blocked[ablation] else None
        replay[item_id] = decisions

    (out / "dataset.jsonl").write_text("\n".join(dataset_lines) + "\n")
    (out / "images.jsonl").write_text("\n".join(image_lines) + "\n")
    rules = [dict(r, active=True, version=1, parent_version=None, exemptions=[]) for r in RULES]
    (out / "rules.json").write_text(json.dumps({"rules": rules}, indent=2, sort_keys=True) + "\n")
    (out / "replay.json").write_text(json.dumps({"items": replay}, indent=1, sort_keys=True) + "\n")
    config = {"rules": "rules.json", "replay": "replay.json", "images": "images.jsonl",
              "storage_root": "eval-data"}
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")

    for ablation, rows in TARGETS.items():
        (out / "golden" / (ablation + ".json")).write_text(
            json.dumps(report_json(ablation, rows), indent=2, sort_keys=True) + "\n")
        (out / "golden" / (ablation + ".txt")).write_text(report_text(ablation, rows))


if __name__ == "__main__":
    main()
