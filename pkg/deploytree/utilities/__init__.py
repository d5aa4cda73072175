"""Utilities package for deploytree."""
