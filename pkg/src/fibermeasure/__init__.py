"""Canonical fiber measures on level sets of polynomial maps over local fields."""
