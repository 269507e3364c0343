"""Shipped experiment plans"""
