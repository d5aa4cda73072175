"""Database package for deploytree."""
