"""
Test suite for the Higgs de Sitter solver
"""
