"""Numerical laboratory for the conformal Skorokhod embedding problem."""
