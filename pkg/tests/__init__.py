"""Tests for VC Scout"""
