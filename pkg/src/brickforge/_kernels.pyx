# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: mean-shift color migration and edge hysteresis.

Must stay bit-identical to brickforge._kernels_py: window offsets scanned
dy-major, distances summed r,g,b left to right, float64 accumulators,
float32 storage (built with -ffp-contract=off for this reason).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

BACKEND = "native"


def mean_shift_filter(img, int spatial_radius, double color_radius, int max_iter,
                      double tol=0.5):
    """Flat-kernel mean-shift color migration with a fixed spatial window.

    Same contract as the numpy fallback; see brickforge._kernels_py.
    """
    cdef cnp.ndarray[cnp.float32_t, ndim=3] cur = np.ascontiguousarray(img, dtype=np.float32)
    cdef cnp.ndarray[cnp.float32_t, ndim=3] nxt = np.empty_like(cur)
    cdef int h = cur.shape[0]
    cdef int w = cur.shape[1]
    cdef int r = spatial_radius
    cdef double cr2 = color_radius * color_radius
    cdef float[:, :, ::1] a = cur
    cdef float[:, :, ::1] b = nxt
    cdef float[:, :, ::1] tmp
    cdef int it, y, x, dy, dx, ny, nx
    cdef int y0, y1, x0, x1
    cdef double cr_, cg_, cb_, dr, dg, db, dist
    cdef double sr, sg, sb, cnt, nr, ng, nb_
    cdef float fr, fg, fb
    cdef double maxdiff

    for it in range(max_iter):
        maxdiff = 0.0
        for y in range(h):
            y0 = -r if y - r >= 0 else -y
            y1 = r if y + r < h else h - 1 - y
            for x in range(w):
                x0 = -r if x - r >= 0 else -x
                x1 = r if x + r < w else w - 1 - x
                cr_ = a[y, x, 0]
                cg_ = a[y, x, 1]
                cb_ = a[y, x, 2]
                sr = 0.0
                sg = 0.0
                sb = 0.0
                cnt = 0.0
                for dy in range(y0, y1 + 1):
                    ny = y + dy
                    for dx in range(x0, x1 + 1):
                        nx = x + dx
                        nr = a[ny, nx, 0]
                        ng = a[ny, nx, 1]
                        nb_ = a[ny, nx, 2]
                        dr = nr - cr_
                        dg = ng - cg_
                        db = nb_ - cb_
                        dist = dr * dr + dg * dg + db * db
                        if dist <= cr2:
                            sr += nr
                            sg += ng
                            sb += nb_
                            cnt += 1.0
                fr = <float> (sr / cnt)
                fg = <float> (sg / cnt)
                fb = <float> (sb / cnt)
                b[y, x, 0] = fr
                b[y, x, 1] = fg
                b[y, x, 2] = fb
                dist = fabs((<double> fr) - cr_)
                if dist > maxdiff:
                    maxdiff = dist
                dist = fabs((<double> fg) - cg_)
                if dist > maxdiff:
                    maxdiff = dist
                dist = fabs((<double> fb) - cb_)
                if dist > maxdiff:
                    maxdiff = dist
        tmp = a
        a = b
        b = tmp
        if maxdiff < tol:
            break
    return np.asarray(a)


def hysteresis_closure(strong, weak):
    """All weak pixels 8-connected to a strong pixel (strong included)."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] s = np.ascontiguousarray(strong, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] wk = np.ascontiguousarray(weak, dtype=np.uint8)
    cdef int h = s.shape[0]
    cdef int w = s.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] stack = np.empty(h * w, dtype=np.int64)
    cdef unsigned char[:, ::1] sv = s
    cdef unsigned char[:, ::1] wv = wk
    cdef unsigned char[:, ::1] ov = out
    cdef long long[::1] st = stack
    cdef Py_ssize_t top = 0
    cdef int y, x, cy, cx, ty, tx, dy, dx

    for y in range(h):
        for x in range(w):
            if sv[y, x] and wv[y, x] and not ov[y, x]:
                ov[y, x] = 1
                st[top] = y * w + x
                top += 1
                while top > 0:
                    top -= 1
                    cy = <int> (st[top] // w)
                    cx = <int> (st[top] % w)
                    for dy in range(-1, 2):
                        for dx in range(-1, 2):
                            ty = cy + dy
                            tx = cx + dx
                            if 0 <= ty < h and 0 <= tx < w and wv[ty, tx] and not ov[ty, tx]:
                                ov[ty, tx] = 1
                                st[top] = ty * w + tx
                                top += 1
    return out.astype(bool)
