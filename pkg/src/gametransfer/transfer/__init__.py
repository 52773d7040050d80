"""Channel matching and parameter transplant between game domains.

Submodules: ``trees`` (rule trees, Zhang-Shasha distance), ``mapping``
(state/action channel matching), ``transplant`` (parameter copying).
"""
