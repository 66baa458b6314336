"""Writes stand-in cross-encoder score tables for the toy dataset.

Every (query, article) pair gets a probability. Gold articles score high and
others low, with a little seeded noise. Each scorer is also misled on half of
the queries: it rates one non-gold article above the gold ones and the gold
ones lower than usual. The origin scorer errs on even query positions and the
reform scorer on odd ones, so neither table alone ranks every query correctly.
"""
import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent

# (query id, misleading article for origin, misleading article for reform)
CONFUSERS = {
    "R01": ("193", "180"),
    "T01": ("200", "555"),
    "T02": ("96", "555"),
    "T03": ("5", "415"),
    "T04": ("180", "206"),
    "T05": ("601", "709"),
    "T06": ("415", "200"),
    "T07": ("709", "555"),
    "T08": ("612", "555"),
    "T09": ("162", "555"),
}


def load():
    articles = [json.loads(l)["id"] for l in (HERE / "corpus.jsonl").open(encoding="utf-8") if l.strip()]
    queries = [json.loads(l)["id"] for l in (HERE / "queries.jsonl").open(encoding="utf-8") if l.strip()]
    gold = {}
    for line in (HERE / "qrels.tsv").open(encoding="utf-8"):
        if line.strip():
            q, a = line.split("\t")
            gold.setdefault(q, set()).add(a.strip())
    return articles, queries, gold


def table(name, articles, queries, gold, errs_on, confuser_slot, seed):
    rng = random.Random(seed)
    rows = []
    for pos, q in enumerate(queries):
        misled = pos % 2 == errs_on
        confuser = CONFUSERS[q][confuser_slot]
        for a in articles:
            if a in gold.get(q, ()):
                s = (0.55 if misled else 0.80) + rng.uniform(-0.05, 0.05)
            elif misled and a == confuser:
                s = 0.90 + rng.uniform(-0.03, 0.03)
            else:
                s = 0.10 + rng.uniform(-0.08, 0.08)
            rows.append(f"{q}\t{a}\t{s:.6f}\n")
    (HERE / "scores").mkdir(exist_ok=True)
    (HERE / "scores" / f"{name}.tsv").write_text("".join(rows), encoding="utf-8")


def main():
    articles, queries, gold = load()
    table("origin", articles, queries, gold, 0, 0, 1001)
    table("reform", articles, queries, gold, 1, 1, 2002)


if __name__ == "__main__":
    main()
