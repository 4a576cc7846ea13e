"""Soft sensor for boiler NOx: MI channel selection, delay alignment,
autoencoder compression and an extreme learning machine regressor."""

__version__ = "0.1.0"
