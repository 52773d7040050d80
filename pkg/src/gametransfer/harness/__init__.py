"""Experiment plumbing: configs, matches, reports and the command-line driver."""
