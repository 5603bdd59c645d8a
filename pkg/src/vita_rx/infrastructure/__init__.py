"""Infrastructure layer — concrete adapter implementations."""
