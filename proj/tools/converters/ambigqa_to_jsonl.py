#!/usr/bin/env python3
"""Converts an AmbigQA-style validation JSON file to the canonical corpus JSONL.

Input: a JSON array of items shaped like
  {"id": ..., "question": ...,
   "annotations": [{"type": "singleAnswer", "answer": [...]} |
                   {"type": "multipleQAs", "qaPairs": [{"question":..., "answer":[...]}]}]}

The first listed answer becomes `gold`, every other answer string becomes a
gold alias. Usage:  ambigqa_to_jsonl.py input.json output.jsonl
"""

import json
import sys


def answers_of(item):
    out = []
    for ann in item.get("annotations", []):
        if ann.get("type") == "singleAnswer":
            out.extend(ann.get("answer", []))
        elif ann.get("type") == "multipleQAs":
            for pair in ann.get("qaPairs", []):
                out.extend(pair.get("answer", []))
    seen, unique = set(), []
    for a in out:
        if a not in seen:
            seen.add(a)
            unique.append(a)
    return unique


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    items = json.load(open(sys.argv[1]))
    with open(sys.argv[2], "w") as out:
        for item in items:
            answers = answers_of(item)
            record = {"id": str(item["id"]), "text": item["question"], "dataset": "ambigqa"}
            if answers:
                record["gold"] = answers[0]
                if len(answers) > 1:
                    record["gold_aliases"] = answers[1:]
            out.write(json.dumps(record) + "\n")


if __name__ == "__main__":
    main()
