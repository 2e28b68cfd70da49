"""
FastAPI service exposing classification, spectra and k=2 region lookups.
"""
