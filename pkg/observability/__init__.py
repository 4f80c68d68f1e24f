"""
Shared observability utilities: structured milestone events and their in-memory store.
"""
