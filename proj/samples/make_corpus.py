#!/usr/bin/env python3
# Copyright 2026 The privrec Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the small synthetic sample corpus under samples/data/.

The output is deterministic. Files:
  metadata.jsonl      one product per line (dataset-style keys)
  interactions.jsonl  user_id, item_id, timestamp
  labels.jsonl        product_id, label (sensitive | nonsensitive)
  scores.jsonl        product_id, score in [0, 1]
"""

import json
import pathlib
import random

SENSITIVE = ["Health & Personal Care", "Health & Household", "Beauty & Personal Care"]

VOCAB = {
    "Amazon Fashion": (["linen", "denim", "wool", "silk", "canvas"],
                       ["shirt", "jacket", "scarf", "skirt", "blazer", "sneaker"]),
    "Beauty & Personal Care": (["hydrating", "fragrance-free", "matte", "gentle", "repair"],
                               ["serum", "shampoo", "lotion", "cleanser", "conditioner"]),
    "Electronics": (["wireless", "usb-c", "bluetooth", "portable", "4k"],
                    ["charger", "headphones", "speaker", "monitor", "keyboard"]),
    "Health & Household": (["unscented", "hypoallergenic", "antibacterial", "medical", "daily"],
                           ["wipes", "thermometer", "bandages", "humidifier", "pill organizer"]),
    "Magazine Subscriptions": (["monthly", "quarterly", "digital", "print", "annual"],
                               ["travel magazine", "science digest", "cooking journal",
                                "photo quarterly", "garden review"]),
    "Books": (["paperback", "hardcover", "illustrated", "annotated", "collected"],
              ["novel", "cookbook", "biography", "atlas", "poetry anthology"]),
    "Baby Products": (["soft", "organic", "washable", "foldable", "quiet"],
                      ["stroller", "swaddle", "bottle", "crib sheet", "teether"]),
    "Grocery & Gourmet Food": (["roasted", "organic", "spiced", "dark", "smoked"],
                               ["coffee beans", "olive oil", "tea sampler", "chocolate", "almonds"]),
    "Health & Personal Care": (["prescription-strength", "clinical", "sugar-free", "extra-strength",
                                "sensitive-skin"],
                               ["eczema cream", "glucose monitor", "pain reliever",
                                "allergy tablets", "blood pressure cuff"]),
    "Musical Instruments": (["acoustic", "electric", "maple", "nylon", "vintage"],
                            ["guitar strings", "drum sticks", "ukulele", "capo", "mixer"]),
}

# Items outside the sensitive categories that still reveal health status, and
# items inside them that do not. They make the labels differ from a pure
# category rule.
SENSITIVE_EXTRAS = {"Grocery & Gourmet Food": "diabetic", "Books": "recovery"}
BENIGN_IN_SENSITIVE = {"Beauty & Personal Care": "hairbrush", "Health & Household": "paper towels"}

PRODUCTS_PER_CATEGORY = 30
USERS = 24


def make_products(rng):
    products = []
    for cat_index, (category, (adjectives, nouns)) in enumerate(VOCAB.items()):
        for i in range(PRODUCTS_PER_CATEGORY):
            adj = adjectives[i % len(adjectives)]
            noun = nouns[(i // len(adjectives)) % len(nouns)]
            title = f"{adj.capitalize()} {noun} model {cat_index}{i:02d}"
            sensitive = category in SENSITIVE
            if i == 7 and category in SENSITIVE_EXTRAS:
                title = f"{SENSITIVE_EXTRAS[category].capitalize()} {noun} model {cat_index}{i:02d}"
                sensitive = True
            if i == 11 and category in BENIGN_IN_SENSITIVE:
                title = f"Plain {BENIGN_IN_SENSITIVE[category]} model {cat_index}{i:02d}"
                sensitive = False
            products.append({
                "parent_asin": f"B{cat_index:02d}{i:04d}",
                "main_category": category,
                "title": title,
                "features": [f"{adj} finish", f"{noun} for everyday use"],
                "description": [f"A {adj} {noun} from the {category} range."],
                "details": {"Item model number": f"M-{cat_index}-{i}"},
                "_sensitive": sensitive,
                "_score": round(rng.uniform(0.55, 0.95) if sensitive else rng.uniform(0.02, 0.4), 4),
            })
    return products


def make_interactions(rng, products):
    by_category = {}
    for p in products:
        by_category.setdefault(p["main_category"], []).append(p)
    categories = list(VOCAB)
    rows = []
    for u in range(USERS):
        user = f"user{u:03d}"
        favourites = rng.sample(categories, 3)
        n = rng.randint(31, 40)
        pool = [p for c in favourites for p in by_category[c]]
        picks = rng.sample(pool, n)
        # Keep at most twelve sensitive items among the final 21, and let the
        # held-out target share the category of the last history item.
        tail = picks[-21:]
        sens = [p for p in tail if p["main_category"] in SENSITIVE]
        if len(sens) > 12:
            for p in sens[12:]:
                tail.remove(p)
            safe = [p for p in pool if p["main_category"] not in SENSITIVE and p not in picks]
            if not safe:
                safe = [p for c in categories if c not in SENSITIVE for p in by_category[c]
                        if p not in picks]
            while len(tail) < 21:
                tail.insert(0, safe.pop(rng.randrange(len(safe))))
        last_cat = tail[-2]["main_category"]
        if tail[-1]["main_category"] != last_cat:
            used = {p["parent_asin"] for p in picks} | {p["parent_asin"] for p in tail}
            options = [p for p in by_category[last_cat] if p["parent_asin"] not in used]
            tail[-1] = options[0]
        picks = picks[:-21] + tail
        t = 1_600_000_000 + u * 1000
        for p in picks:
            t += rng.choice([0, 1, 1, 2])  # occasional ties keep input order
            rows.append({"user_id": user, "item_id": p["parent_asin"], "timestamp": t})
    return rows


def main():
    rng = random.Random(20240601)
    out = pathlib.Path(__file__).resolve().parent / "data"
    out.mkdir(exist_ok=True)
    products = make_products(rng)
    interactions = make_interactions(rng, products)

    with open(out / "metadata.jsonl", "w", encoding="utf-8") as f:
        for i, p in enumerate(products):
            record = {k: v for k, v in p.items() if not k.startswith("_")}
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
            if i == 40:
                f.write('{"title": "truncated record\n')
        # One record without an id; ingestion derives it from the text.
        f.write(json.dumps({"main_category": "Books", "title": "Untitled pamphlet",
                            "features": "single string feature", "description": ""}) + "\n")
    with open(out / "interactions.jsonl", "w", encoding="utf-8") as f:
        for r in interactions:
            f.write(json.dumps(r) + "\n")
    with open(out / "labels.jsonl", "w", encoding="utf-8") as f:
        for p in products:
            label = "sensitive" if p["_sensitive"] else "nonsensitive"
            f.write(json.dumps({"product_id": p["parent_asin"], "label": label}) + "\n")
    with open(out / "scores.jsonl", "w", encoding="utf-8") as f:
        for p in products:
            f.write(json.dumps({"product_id": p["parent_asin"], "score": p["_score"]}) + "\n")


if __name__ == "__main__":
    main()
