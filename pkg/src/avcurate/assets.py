"""Accessors for the bundled desk-scale fixtures (lexicon, LM corpus, manifest)."""

from __future__ import annotations

import functools
from importlib import resources
from pathlib import Path

from .ngram import AddKNgramModel
from .phonetics import Lexicon, load_lexicon


def asset_path(name: str) -> Path:
    return Path(str(resources.files("avcurate").joinpath("assets", name)))


def lexicon_path() -> Path:
    return asset_path("lexicon_small.tsv")


def lm_corpus_path() -> Path:
    return asset_path("lm_corpus.txt")


def manifest_path() -> Path:
    return asset_path("manifest_small.jsonl")


@functools.lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    return load_lexicon(lexicon_path())


@functools.lru_cache(maxsize=1)
def default_lm() -> AddKNgramModel:
    lines = lm_corpus_path().read_text(encoding="utf-8").splitlines()
    return AddKNgramModel.train([ln for ln in lines if ln.strip()], order=3, k=0.01)
