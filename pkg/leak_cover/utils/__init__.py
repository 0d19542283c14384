"""Command-line, batch and plotting utilities"""
