"""Config-driven client"""
