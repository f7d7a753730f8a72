# Domain modules for the Guided-SPSA lab