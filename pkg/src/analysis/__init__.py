"""Exact analysis of enumerated chains: spectra, conductance, distances and thresholds"""
