namespace factline {}
