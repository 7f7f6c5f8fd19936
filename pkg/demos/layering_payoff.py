"""Where does the second layer actually pay?

Optimizes the fixed-tuple broadcast scheme and its single-layer slice across
the relay-link SNR, with and without local CSI at the encoder.  The pattern
to look for: with CSI the layering gain fades as the relay link hardens
(only the side-information gain stays uncertain), without CSI it persists.
"""

import numpy as np

from relharq import (CompressionPolicy, FadingModel, GridSpec, SystemConfig,
                     optimize_lcsit, optimize_no_lcsit, optimize_single_layer)

GRID = GridSpec(r_max=5.0, r_step=0.1, alpha_step=0.05, refine_rounds=2)
QUAD_N = 32
comp = CompressionPolicy("constant")

print(f"{'rho_D [dB]':>10} | {'bc lcsit':>9} {'sl lcsit':>9} {'gap':>7} | "
      f"{'bc fixed':>9} {'sl fixed':>9} {'gap':>7}")
for rho_db in (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0):
    cfg = SystemConfig(
        power=1.0, backhaul_capacity=1.0, max_rounds=2,
        model_d=FadingModel("rician", mean_power=10 ** (rho_db / 10)),
        model_s=FadingModel("rayleigh", mean_power=1.0),
    )
    bc_l = optimize_lcsit(cfg, comp, grid_spec=GRID, n_nodes=QUAD_N,
                          quad_n=QUAD_N).eta
    sl_l = optimize_lcsit(cfg, comp, grid_spec=GRID, n_nodes=QUAD_N,
                          quad_n=QUAD_N, single_layer=True).eta
    bc_n = optimize_no_lcsit(cfg, comp, grid_spec=GRID, quad_n=QUAD_N).eta
    sl_n = optimize_single_layer(cfg, comp, grid_spec=GRID, quad_n=QUAD_N).eta
    print(f"{rho_db:>10.1f} | {bc_l:>9.4f} {sl_l:>9.4f} {bc_l - sl_l:>7.4f} | "
          f"{bc_n:>9.4f} {sl_n:>9.4f} {bc_n - sl_n:>7.4f}")

print("\nlayering hedges channel uncertainty: the lcsit gap should shrink "
      "with rho_D, the fixed-tuple gap should not.")
