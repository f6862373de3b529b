"""Outer L^p(l^r) spaces: finite outer measures, dyadic upper half space, tent spaces."""
