"""The component ablation grid.

Eight variants toggling mask branch, non-local layer, and block counts,
each trained briefly under identical settings and scored on a shared
validation set.  At this scale the PSNR column is indicative only; the
point is that every variant builds and trains through the same plumbing.
Writes ``demo_out/ablation.csv``.
"""

import time
from pathlib import Path

import rnan

out = Path("demo_out")
out.mkdir(exist_ok=True)

corpus = rnan.make_corpus(6, seed=55, size=32, channels=1)
val = [(f"v{i}", img) for i, img in enumerate(rnan.make_corpus(3, seed=66, size=32, channels=1))]
spec = rnan.DegradationSpec(kind="awgn", sigma=25.0, seed=4)
block = rnan.BlockConfig(q=1, t=1, m=1, features=8, nlb_channels=4)
train_cfg = rnan.desk_train(max_iters=120, seed=21, batch_size=2, patch_size=16)

print(f"{'case':>4s} {'mask':>5s} {'nlb':>4s} {'local':>6s} {'nonlocal':>9s} {'params':>10s} {'psnr':>7s}")
start = time.time()
rows = rnan.run_ablation(corpus, val, spec, block, train_cfg, csv_path=out / "ablation.csv")
for row in rows:
    c = row.case
    n_params = rnan.count_parameters(rnan.case_network(c, block, 1))
    print(f"{c.index:>4} {str(c.mask_branch):>5s} {str(c.non_local):>4s}"
          f" {c.local_blocks:>6} {c.nonlocal_blocks if c.non_local else 0:>9}"
          f" {n_params:>10,} {row.psnr_db:>6.2f}")
print(f"\n{len(rows)} configurations trained in {time.time() - start:.0f}s")
print(f"wrote {out / 'ablation.csv'}")
