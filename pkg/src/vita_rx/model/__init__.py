"""Model layer — parameter registry, encoder, predictor and their composition."""
