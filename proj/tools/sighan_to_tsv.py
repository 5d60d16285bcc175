#!/usr/bin/env python3
"""Convert SIGHAN bake-off files to the canonical corpus and confusion-set formats.

    sighan_to_tsv.py corpus 2014 B1_training.sgml > train.tsv
    sighan_to_tsv.py corpus 2013 SIGHAN13_train.xml > train.tsv
    sighan_to_tsv.py sets SimilarShape.txt SimilarPronunciation.txt > sets.txt

2014/2015 training files hold <PASSAGE id=..> text and <MISTAKE id=..
location=..> records with <WRONG>/<CORRECTION>. 2013 files hold <DOC Nid=..>
with <TEXT> and <MISTAKE wrong_position=..> records with <wrong>/<correct>,
which may span several characters; those are aligned character by character.
"""

import argparse
import re
import sys
from collections import defaultdict


def _text(s):
    return re.sub(r"\s+", "", s)


def _emit(sid, text, edits, out):
    groups = ";".join(f"{pos},{ch}" for pos, ch in sorted(set(edits)))
    out.write(f"{sid}\t{text}\t{groups}\n")


def convert_2014(data, out):
    passages = {}
    for m in re.finditer(r'<PASSAGE\s+id="([^"]+)"\s*>(.*?)</PASSAGE>', data, re.S):
        passages[m.group(1)] = _text(m.group(2))
    edits = defaultdict(list)
    mistake = re.compile(
        r'<MISTAKE\s+id="([^"]+)"\s+location="(\d+)"\s*>\s*<WRONG>(.*?)</WRONG>\s*'
        r"<CORRECTION>(.*?)</CORRECTION>",
        re.S,
    )
    for m in mistake.finditer(data):
        sid, pos, wrong, right = m.group(1), int(m.group(2)), _text(m.group(3)), _text(m.group(4))
        if len(wrong) == 1 and len(right) == 1 and wrong != right:
            edits[sid].append((pos, right))
    for sid, text in passages.items():
        _emit(sid, text, edits.get(sid, []), out)


_MISTAKE_2013 = re.compile(
    r'<MISTAKE\s+wrong_position="?(\d+)"?\s*>\s*<wrong>(.*?)</wrong>\s*<correct>(.*?)</correct>',
    re.S | re.I,
)


def convert_2013(data, out):
    for doc in re.finditer(r'<DOC\s+Nid="?([^">\s]+)"?\s*>(.*?)</DOC>', data, re.S):
        sid, body = doc.group(1), doc.group(2)
        tm = re.search(r"<TEXT>(.*?)</TEXT>", body, re.S)
        if not tm:
            continue
        text = _text(tm.group(1))
        edits = []
        for m in _MISTAKE_2013.finditer(body):
            pos, wrong, right = int(m.group(1)), _text(m.group(2)), _text(m.group(3))
            if len(wrong) != len(right):
                continue
            # wrong_position points at the first character of the wrong span.
            for k, (w, r) in enumerate(zip(wrong, right)):
                if w != r and pos + k <= len(text) and text[pos + k - 1] == w:
                    edits.append((pos + k, r))
        _emit(sid, text, edits, out)


def convert_sets(paths, out):
    sets = defaultdict(list)
    order = []
    for path in paths:
        with open(path, encoding="utf-8-sig") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                head, rest = line[0], line[1:]
                if head not in sets:
                    order.append(head)
                for ch in re.sub(r"[\s,:]", "", rest):
                    if ch != head and ch not in sets[head]:
                        sets[head].append(ch)
    for head in order:
        out.write(f"{head}:{''.join(sets[head])}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="kind", required=True)
    c = sub.add_parser("corpus")
    c.add_argument("year", choices=["2013", "2014", "2015"])
    c.add_argument("files", nargs="+")
    s = sub.add_parser("sets")
    s.add_argument("files", nargs="+")
    args = ap.parse_args()

    if args.kind == "sets":
        convert_sets(args.files, sys.stdout)
        return
    for path in args.files:
        with open(path, encoding="utf-8-sig") as f:
            data = f.read()
        (convert_2013 if args.year == "2013" else convert_2014)(data, sys.stdout)


if __name__ == "__main__":
    main()
