"""Infrastructure adapters — implementations of domain ports."""
