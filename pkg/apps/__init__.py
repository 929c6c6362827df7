# This file makes 'apps' a Python package
