"""Small-area travel demand modeling engine.

Five building blocks behind one pipeline: IPF population synthesis, ML trip
generation with exact Shapley attribution, entropy-maximizing gravity trip
distribution, multimodal Dijkstra routing, and Naive Bayes mode choice.
"""

__version__ = "0.1.0"
