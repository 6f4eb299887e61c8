"""Hybrid physics and neural force-correction time integration for wave-excited bodies."""

__version__ = "0.1.0"
