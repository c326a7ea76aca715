"""Python bindings for the freqsift core."""

import json

from . import _core
from ._core import (
    Classifier,
    Error,
    forward_fft,
    inverse_fft,
    levenshtein,
    levenshtein_ratio,
    mann_whitney_u,
    paired_t_test,
    parse_oracle_spec,
    psd,
    read_wav,
    run_cli,
    spectral_entropy,
    stoi,
    write_wav,
)

__version__ = _core.__version__


def make_classifier(entry, default_sample_rate=16000):
    """Build a builtin or external classifier from a config-style model entry."""
    return _core.make_classifier(json.dumps(entry), default_sample_rate)


def band_classifier(id, edges, labels=None, sample_rate=16000, temperature=1.0):
    entry = {"id": id, "type": "band_energy", "band_edges": list(edges), "sample_rate": sample_rate,
             "temperature": temperature}
    if labels is not None:
        entry["labels"] = list(labels)
    return make_classifier(entry, sample_rate)


def find_sufficient(classifier, samples, sample_rate, **options):
    return json.loads(_core.find_sufficient(classifier, samples, sample_rate, **options))


def find_complete(classifier, samples, sample_rate, **options):
    return json.loads(_core.find_complete(classifier, samples, sample_rate, **options))


def verify_sufficient(classifier, samples, sample_rate, mask, **options):
    return _core.verify_sufficient(classifier, samples, sample_rate, json.dumps(mask), **options)


def reconstruct(samples, sample_rate, mask, n_fft=0):
    return _core.reconstruct(samples, sample_rate, json.dumps(mask), n_fft)


def transfer_matrix(models, signals, sample_rate, **options):
    """signals maps id -> samples. Returns (matrix dict, csv text)."""
    ids = list(signals)
    text, csv = _core.transfer_matrix(models, ids, [signals[i] for i in ids], sample_rate, **options)
    return json.loads(text), csv


def compose(classifier, signals, sample_rate):
    """signals maps id -> samples. Returns (manifest dict, composite samples)."""
    ids = list(signals)
    text, composite = _core.compose(classifier, ids, [signals[i] for i in ids], sample_rate)
    return json.loads(text), composite


def transplant(classifier, composite, target, sample_rate, mode="add"):
    flipped, original, result, samples = _core.transplant(classifier, composite, target, sample_rate, mode)
    return {"flipped": flipped, "original_class": original, "result_class": result, "signal": samples}
