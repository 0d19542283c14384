"""Placement algorithms and exact models"""
