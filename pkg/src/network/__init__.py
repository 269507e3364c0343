"""Interference model: conflict graphs, schedules and the grid instance"""
