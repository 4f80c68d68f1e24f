"""
Test suite for deepgraphlog.
"""
