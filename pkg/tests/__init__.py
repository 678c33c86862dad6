"""Pytest test module for biasamp. (Used by pytest)"""
