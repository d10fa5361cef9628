"""Emulated RFSoC qubit-control chain and calibration routines."""
