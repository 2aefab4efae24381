#!/usr/bin/env python3
"""Converts OpenBookQA JSONL to the canonical corpus JSONL.

Input lines look like
  {"id": ..., "question": {"stem": ..., "choices": [{"label": "A", "text": ...}]},
   "answerKey": "A"}

Usage:  openbookqa_to_jsonl.py input.jsonl output.jsonl [limit]
"""

import json
import sys


def main():
    if len(sys.argv) not in (3, 4):
        sys.exit(__doc__)
    limit = int(sys.argv[3]) if len(sys.argv) == 4 else None
    with open(sys.argv[1]) as src, open(sys.argv[2], "w") as out:
        for i, line in enumerate(src):
            if limit is not None and i >= limit:
                break
            item = json.loads(line)
            record = {
                "id": str(item["id"]),
                "text": item["question"]["stem"],
                "choices": [
                    {"label": c["label"], "text": c["text"]}
                    for c in item["question"]["choices"]
                ],
                "gold": item["answerKey"],
                "dataset": "openbookqa",
            }
            out.write(json.dumps(record) + "\n")


if __name__ == "__main__":
    main()
