#!/usr/bin/env python3
#
# rxnseq - reaction product prediction toolkit
# SPDX-License-Identifier: Apache-2.0
#
"""Build the 1000-line tokenizer round-trip corpus.

Every patent-style and textbook line is kept verbatim (first field only);
the remainder is a seeded sample of generated reactions.
"""

import argparse
import random


def first_fields(path):
    with open(path, encoding="utf-8") as f:
        return [line.split()[0] for line in f if line.strip()]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--generated", default="data/generated.rsmi")
    p.add_argument("--patent", default="data/patent_sample.rsmi")
    p.add_argument("--textbook", default="data/textbook_sample.rsmi")
    p.add_argument("--size", type=int, default=1000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default="data/roundtrip_corpus.rsmi")
    args = p.parse_args()

    fixed = first_fields(args.patent) + first_fields(args.textbook)
    generated = first_fields(args.generated)
    rng = random.Random(args.seed)
    sample = rng.sample(generated, args.size - len(fixed))
    lines = fixed + sample
    rng.shuffle(lines)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
