"""Forward-only network stages over numpy arrays."""
