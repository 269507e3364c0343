"""Queueing simulation: arrivals, queues, scheduling loops, oracle and trace output"""
