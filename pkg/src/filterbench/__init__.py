"""Workbench for filter models of the untyped lambda calculus and their test calculi."""
