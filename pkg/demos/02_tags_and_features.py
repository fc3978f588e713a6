"""IOB2 tagging, distance features and classifier windows.

Run: python demos/02_tags_and_features.py
"""

from __future__ import annotations

from relsent.features import DistanceIndexer, Vocabulary, extract_window, relative_distances, window_features
from relsent.iob2 import Span, decode, encode, repair

tokens = "the sake menu should not be overlooked !".split()
tags = encode([Span(1, 3)], len(tokens))
print(" ".join(f"{w}/{t}" for w, t in zip(tokens, tags)))
print("decoded:", decode(tags))

# Predicted sequences can be invalid; an orphan I becomes B.
raw = "O I I O I".split()
print(f"repair {' '.join(raw)} -> {' '.join(repair(raw))}")

# Signed offsets from a focus span: zero inside, -1 / +1 next to it.
review = "the fish is fresh and the staff is great".split()
opinion = Span(3, 4, "opinion")
print("distances to 'fresh':", relative_distances(len(review), opinion))

# Distances index a learned table; anything beyond +-20 is clamped, 41 is padding.
ix = DistanceIndexer()
print("indices for -30, -1, 0, 7, 99:", ix.encode([-30, -1, 0, 7, 99]))

# Sentiment and relation inputs are 20-token windows; short texts are padded on the left.
print("window for a 9-token review:", extract_window(len(review), [opinion], 20))
print("window in a 100-token text:", extract_window(100, [Span(50, 51)], 20))
print("pair window:", extract_window(100, [Span(10, 11), Span(30, 31)], 20))

vocab = Vocabulary(review)
f = window_features(review, ["DT", "NN", "VBZ", "JJ", "CC", "DT", "NN", "VBZ", "JJ"],
                    [Span(6, 7), Span(8, 9, "opinion")], 20, vocab, ix)
print("aspect distance row:", f.distances[0])
print("opinion distance row:", f.distances[1])
