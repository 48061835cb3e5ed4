"""
Field storage, spatial operators and time integration
"""
