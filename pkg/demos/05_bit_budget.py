"""Transmission budget for 6-bit side-chain channels.

Each complex measurement is one word: 16 bits at full precision, B bits
when quantized. The saving is truncated to hundredths of a percent.
"""

from gridsense.bench import bit_account
from gridsense.quantization import Full, Quantized, QuantizerSpec

P = 76
for k in (0, 17, 34, 42):
    tags = [Quantized(QuantizerSpec(6, 1.0))] * k + [Full()] * (P - k)
    a = bit_account(tags)
    print(f"K={k:2d}: {a.bits_total:4d} bits ({a.component_bits} counting real and imaginary words), "
          f"{a.saved_pct:.2f}% below {a.baseline_bits}")
