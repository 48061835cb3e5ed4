"""
Diagnostics and the Duffing reference system
"""
