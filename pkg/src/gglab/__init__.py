"""Coarse geometry of Cayley balls: electrification, heights, graded hyperbolicity."""
