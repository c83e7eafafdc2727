"""Column-basis game on GF(2) vector pools."""
