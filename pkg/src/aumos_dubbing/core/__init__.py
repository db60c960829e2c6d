"""Domain logic: corpus derivation, binning, codec, noise, model, p2w, metrics, VAD."""
