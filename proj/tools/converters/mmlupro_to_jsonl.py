#!/usr/bin/env python3
"""Converts MMLU-Pro rows to the canonical corpus JSONL.

Accepts the dataset exported as JSONL with fields
  {"question_id": ..., "question": ..., "options": [...], "answer": "C",
   "category": "physics"}
(options carry up to ten entries; labels A..J are assigned in order).

Usage:  mmlupro_to_jsonl.py input.jsonl output.jsonl [category]
"""

import json
import string
import sys


def main():
    if len(sys.argv) not in (3, 4):
        sys.exit(__doc__)
    category = sys.argv[3].lower() if len(sys.argv) == 4 else None
    with open(sys.argv[1]) as src, open(sys.argv[2], "w") as out:
        for line in src:
            item = json.loads(line)
            if category and item.get("category", "").lower() != category:
                continue
            labels = string.ascii_uppercase
            record = {
                "id": str(item["question_id"]),
                "text": item["question"],
                "choices": [
                    {"label": labels[i], "text": str(option)}
                    for i, option in enumerate(item["options"])
                ],
                "gold": item["answer"],
                "dataset": "mmlu-pro-" + item.get("category", "unknown").lower(),
            }
            out.write(json.dumps(record) + "\n")


if __name__ == "__main__":
    main()
