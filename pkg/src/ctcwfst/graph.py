"""Decoding-graph assembly: token topology composed with lexicon and grammar."""

from __future__ import annotations

from .errors import GraphError
from .wfst import Wfst, arc_sort, compose, connect


def build_tlg(t: Wfst, l: Wfst, g: Wfst) -> Wfst:
    """Compose the token transducer with lexicon and grammar, trim, and sort
    arcs by input label for the decoder. An empty result means the label
    alphabets do not chain and is reported as an error."""
    lg = compose(l, g)
    tlg = connect(compose(t, lg))
    if tlg.is_empty:
        raise GraphError("empty decoding graph (label alphabets do not chain)")
    return arc_sort(tlg, "ilabel")
