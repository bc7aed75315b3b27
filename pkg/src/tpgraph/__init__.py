"""Structure learning for Gaussian graphical models under total positivity."""
