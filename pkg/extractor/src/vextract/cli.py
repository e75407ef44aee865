import argparse
import sys
from typing import Optional, Sequence

from .corpus import read_corpus
from .errors import AlignmentError, CorpusError, ExtractorError, ModelError
from .extract import extract

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_MODEL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vextract",
        description="Dump per-token final-layer transformer vectors into a "
                    "versioned binary bundle.")
    parser.add_argument("--model", required=True,
                        help="architecture name, e.g. pythia-70m")
    parser.add_argument("--step", type=int, required=True,
                        help="training step; 0 selects seed initialization")
    parser.add_argument("--untrained-seed", type=int, default=None,
                        help="weight init seed, required when --step is 0")
    parser.add_argument("--corpus", required=True,
                        help="TSV with doc_id, sentence_id, word_index, "
                             "word_text columns")
    parser.add_argument("--out", required=True,
                        help="output bundle path (.vbun)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        words = read_corpus(args.corpus)
        count = extract(args.model, args.step, words, args.out,
                        untrained_seed=args.untrained_seed)
    except (CorpusError, AlignmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {args.out} ({count} tokens)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
