# Python package marker for the TWSO restoration toolkit.
