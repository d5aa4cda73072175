"""Profiling core: spaces, linear models, oblique trees and the adaptive sampler."""
