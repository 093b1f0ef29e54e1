"""How a complex phasor is turned into a few bits and what the estimator keeps.

A B-bit midrise quantizer splits the real line into 2**B cells of width
``step`` (the two end cells are unbounded). Real and imaginary parts are
quantized separately. The estimator never sees the raw value again; it
works with the cell limits.
"""

from gridsense.quantization import QuantizerSpec, cell_bounds, quantize_complex

y = 0.83 - 0.21j
for bits in (1, 2, 4, 6):
    spec = QuantizerSpec.from_full_scale(bits, full_scale=1.0)
    re, im = quantize_complex(y, spec)
    lo_re, hi_re = cell_bounds(re.cell, spec)
    lo_im, hi_im = cell_bounds(im.cell, spec)
    print(f"B={bits}: step={spec.step:.4f}  emitted {re.representative:+.4f}{im.representative:+.4f}j  "
          f"Re in ({lo_re:+.4f}, {hi_re:+.4f}]  Im in ({lo_im:+.4f}, {hi_im:+.4f}]")

print("\nA 1-bit quantizer only keeps the signs: every output is (+-step/2) + (+-step/2)j.")
