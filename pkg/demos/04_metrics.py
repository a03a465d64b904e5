"""PSNR and SSIM behaviour.

PSNR tracks mean squared error on the 8-bit scale; SSIM compares local
luminance, contrast, and structure through an 11x11 Gaussian window.  The
sweep below shows how differently they react to noise versus a plain
brightness shift.
"""

import numpy as np

import rnan

img = rnan.make_image(3, size=96, channels=1)

print("noise sweep:")
print(f"  {'sigma':>6s} {'psnr':>9s} {'ssim':>8s}")
for sigma in (5, 15, 30, 60):
    noisy = rnan.add_awgn(img, sigma, seed=4)
    print(f"  {sigma:>6} {rnan.psnr(noisy, img):>8.2f} {rnan.ssim(noisy, img):>8.4f}")

# A constant brightness shift destroys PSNR but barely touches SSIM:
# structure is intact, only luminance moved.
shifted = np.clip(img + 20 / 255, 0, 1)
print("\nbrightness +20/255:")
print(f"  psnr {rnan.psnr(shifted, img):.2f} dB   ssim {rnan.ssim(shifted, img):.4f}")

# Compression-artifact scoring happens on the luminance plane.
rgb = rnan.make_image(8, size=64, channels=3)
y = rnan.rgb_to_y(rgb)
print(f"\nluminance endpoints: white -> {rnan.rgb_to_y(np.ones((1,3,2,2)))[0,0,0,0]*255:.0f}, "
      f"black -> {rnan.rgb_to_y(np.zeros((1,3,2,2)))[0,0,0,0]*255:.0f} (studio range)")

compressed = rnan.jpeg_degrade(y, quality=10)
score = rnan.score_pair(compressed, y)
print(f"jpeg q=10 on the luminance plane: psnr {score.psnr_db:.2f} dB, ssim {score.ssim:.4f}")
