"""Stokes data of irregular connections via multilogarithm series."""
