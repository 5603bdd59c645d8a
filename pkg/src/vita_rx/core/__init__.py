"""Core layer — cross-cutting concerns shared across all layers."""
