"""
Command-line tools and the CSV/JSON dataset writers they share.
"""
