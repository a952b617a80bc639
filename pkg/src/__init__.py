# circle-npd: natural pseudo-distance between periodic Morse functions under rotations
