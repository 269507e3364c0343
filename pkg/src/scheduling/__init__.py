"""Scheduling core: weight functions, Glauber dynamics and decision mechanisms"""
