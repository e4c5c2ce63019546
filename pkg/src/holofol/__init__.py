"""Polynomial foliations of CP(2), holonomy of the line at infinity, and groups of germs."""

__version__ = "0.1.0"
