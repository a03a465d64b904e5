"""Inside the attention blocks.

Shows the three ingredients that distinguish this architecture from a plain
residual CNN: the non-local layer (attention over every spatial position),
the mask branch (a learned gate in (0, 1)), and the fusion rule that
combines them with the block input.
"""

import numpy as np

import rnan
from rnan.network import AttentionBlock, MaskBranch, NonLocalBlock, ParamStore, build_network, fuse
from rnan.rng import stream

rng = stream(2, 0)

# --- non-local layer -------------------------------------------------------
# With its output projection initialised to zero the layer starts as an
# identity, so it can be dropped into a network without disturbing it.
store = ParamStore(np.float64)
nlb = NonLocalBlock(store, "nlb", features=4, inner=2, rng=rng)
x = rng.standard_normal((1, 4, 3, 3))
y, _ = nlb.forward(x)
print("zero-projection non-local layer is the identity:", np.array_equal(y, x))

# Give the projection real weights and watch position 0 mix in information
# from every other position.
np.copyto(store.param("nlb.z.w").value, rng.standard_normal((4, 2)) * 0.5)
y, _ = nlb.forward(x)
print("after enabling the projection, max |change|:", np.abs(y - x).max().round(4))

# --- mask branch -----------------------------------------------------------
cfg = rnan.BlockConfig(q=1, t=1, m=1, features=8, nlb_channels=4, non_local=True)
mstore = ParamStore(np.float64)
mask = MaskBranch(mstore, "mask", cfg, stream(3, 0))
gate, _ = mask.forward(stream(4, 0).standard_normal((1, 8, 10, 10)))
print(f"\nmask branch output range: ({gate.min():.3f}, {gate.max():.3f})  -- always inside (0, 1)")

# --- fusion rules ----------------------------------------------------------
# The proposed rule adds the block input back, so a useless mask (all zeros)
# degrades to a pass-through rather than killing the features.
bstore = ParamStore(np.float64)
blk = AttentionBlock(bstore, "blk", cfg, stream(5, 0))
u, _ = blk.head.forward(stream(6, 0).standard_normal((1, 8, 6, 6)))
trunk_out, _ = blk.trunk.forward(u)
mask_out, _ = blk.mask.forward(u)
proposed = fuse(trunk_out, mask_out, u, "proposed_eq8")
prior = fuse(trunk_out, mask_out, u, "prior_eq7")
print("\nfusion algebra: proposed - prior == input - trunk,",
      "max gap", np.abs((proposed - prior) - (u - trunk_out)).max())

# --- parameter budget ------------------------------------------------------
print("\nparameter counts:")
for name, cfg_ in [
    ("full (8 local + 2 non-local)", rnan.full_scale()),
    ("small (1 + 1)", rnan.NetworkConfig(num_local_blocks=1, num_nonlocal_blocks=1)),
    ("tiny desk preset", rnan.tiny(1)),
]:
    print(f"  {name:30s} {rnan.count_parameters(cfg_):>12,}")

# A freshly built network with all-zero weights and the global residual is
# an exact identity on images: training starts from "change nothing".
net, _ = build_network(rnan.tiny(1), zero_init=True)
img = stream(7, 0).random((1, 1, 12, 12)).astype(np.float32)
print("\nzero-initialised network reproduces its input:", np.array_equal(net.infer(img), img))
