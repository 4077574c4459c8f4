#!/usr/bin/env python3
"""Scalar evaluation of the hybrid loss for the frozen test case.

n = 4, g = [1, 1, 0, 0], p = 0.5 everywhere, no excluded objects
(alpha = 1, so w = 2 on the object and 1 elsewhere), eps = 1e-6.
"""
import math

g = [1.0, 1.0, 0.0, 0.0]
p = [0.5] * 4
eps = 1e-6
alpha = 1.0
w = [alpha * alpha * gi + 1.0 for gi in g]

inter = sum(pi * gi for pi, gi in zip(p, g))
dice = 1.0 - (inter + eps) / (sum(p) + sum(g) + eps)
ce = -sum(wi * (gi * math.log(pi) + (1 - gi) * math.log(1 - pi)) for wi, gi, pi in zip(w, g, p)) / len(p)
print(repr(dice), repr(ce), repr(dice + ce))
