"""Regenerates the frozen constants used by the metric tests.

Images are defined by integer formulas so the C++ tests can rebuild them
exactly; values are stored as float32(k / 255) like ImageF does.
"""
import numpy as np
from skimage.metrics import structural_similarity


def formula_image(h, w, a, b, c, d):
    yy, xx, cc = np.meshgrid(np.arange(h), np.arange(w), np.arange(3), indexing="ij")
    k = (a * yy + b * xx + c * cc + d * (yy * xx % 7)) % 256
    return (k / 255.0).astype(np.float32).astype(np.float64) * 255.0


def trimmed_mean(v, al=0.1, ar=0.1):
    v = np.sort(v.ravel())
    k = v.size
    lo = int(np.ceil(al * k))
    hi = int(np.floor(ar * k))
    return v[lo:k - hi].mean()


def uicm(img):
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    rg = r - g
    yb = (r + g) / 2.0 - b
    mrg, myb = trimmed_mean(rg), trimmed_mean(yb)
    srg = np.mean((rg - mrg) ** 2)
    syb = np.mean((yb - myb) ** 2)
    return -0.0268 * np.hypot(mrg, myb) + 0.1586 * np.sqrt(srg + syb)


def sobel(plane):
    p = np.pad(plane, 1, mode="edge")
    gx = (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2])
    gy = (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:])
    m = np.hypot(gx, gy)
    return m * (255.0 / m.max()) if m.max() > 0 else m


def eme(plane, block=8):
    h, w = plane.shape
    k1, k2 = w // block, h // block
    acc = 0.0
    for by in range(k2):
        for bx in range(k1):
            blk = plane[by * block:(by + 1) * block, bx * block:(bx + 1) * block]
            lo, hi = blk.min(), blk.max()
            if lo > 0 and hi > 0:
                acc += np.log(hi / lo)
    return 2.0 / (k1 * k2) * acc


def uism(img):
    lam = [0.299, 0.587, 0.114]
    return sum(lam[c] * eme(sobel(img[..., c]) * img[..., c]) for c in range(3))


def uiconm(img, block=8):
    h, w, _ = img.shape
    k1, k2 = w // block, h // block
    acc = 0.0
    for by in range(k2):
        for bx in range(k1):
            blk = img[by * block:(by + 1) * block, bx * block:(bx + 1) * block, :]
            lo, hi = blk.min(), blk.max()
            top, bot = hi - lo, hi + lo
            if top > 0 and bot > 0:
                r = top / bot
                acc += r * np.log(r)
    return -acc / (k1 * k2)


if __name__ == "__main__":
    x = formula_image(32, 32, 7, 13, 29, 3)
    y = formula_image(32, 32, 7, 13, 29, 5)
    print("ssim_xy %.17g" % structural_similarity(
        x, y, channel_axis=2, data_range=255, gaussian_weights=True, sigma=1.5,
        use_sample_covariance=False))
    z = formula_image(48, 40, 3, 5, 41, 11)
    print("ssim_zz_shift %.17g" % structural_similarity(
        z, formula_image(48, 40, 3, 5, 43, 11), channel_axis=2, data_range=255,
        gaussian_weights=True, sigma=1.5, use_sample_covariance=False))
    u = formula_image(40, 48, 5, 3, 61, 9)
    a, b, c = uicm(u), uism(u), uiconm(u)
    print("uicm %.17g\nuism %.17g\nuiconm %.17g\nuiqm %.17g" % (a, b, c, 0.0282 * a + 0.2953 * b + 3.5753 * c))
