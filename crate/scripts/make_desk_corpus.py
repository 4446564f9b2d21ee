"""Build the small four-topic corpus used by the desk-scale experiment.

Documents are docstrings harvested (via `ast`, nothing is imported) from four
BSD/MIT-licensed Python packages that cover unrelated topics. Output follows
the one-document-per-line "label<TAB>text" layout of the preprocessed
20 Newsgroups distribution.

    python3 scripts/make_desk_corpus.py OUT_DIR
"""

import ast
import importlib.util
import pathlib
import random
import re
import sys

TOPICS = {
    "graphs": "networkx",
    "symbolic": "sympy",
    "imaging": "skimage",
    "databases": "sqlalchemy",
}
PER_CLASS_TRAIN = 100
PER_CLASS_TEST = 50
MIN_CHARS, MAX_CHARS = 600, 2500
SEED = 42


def docstrings(package):
    root = pathlib.Path(importlib.util.find_spec(package).origin).parent
    seen = set()
    for path in sorted(root.rglob("*.py")):
        if "test" in path.as_posix().lower():
            continue
        try:
            tree = ast.parse(path.read_text(encoding="utf-8", errors="ignore"))
        except SyntaxError:
            continue
        for node in ast.walk(tree):
            if not isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef, ast.Module)):
                continue
            doc = ast.get_docstring(node, clean=True)
            if not doc:
                continue
            text = re.sub(r"[\t\r\n]+", " ", doc).strip()
            if MIN_CHARS <= len(text) <= MAX_CHARS and text not in seen:
                seen.add(text)
                yield text


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    train, test = [], []
    for label, package in TOPICS.items():
        docs = sorted(docstrings(package))
        rng.shuffle(docs)
        need = PER_CLASS_TRAIN + PER_CLASS_TEST
        if len(docs) < need:
            raise SystemExit(f"{package}: only {len(docs)} usable docstrings")
        train += [(label, d) for d in docs[:PER_CLASS_TRAIN]]
        test += [(label, d) for d in docs[PER_CLASS_TRAIN:need]]
    rng.shuffle(train)
    rng.shuffle(test)
    for name, rows in (("train.tsv", train), ("test.tsv", test)):
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            for label, text in rows:
                fh.write(f"{label}\t{text}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/desk")
