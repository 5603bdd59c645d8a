"""Application layer — training, evaluation and experiment use cases."""
