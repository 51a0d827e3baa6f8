"""Set of examples for survcam."""
