"""Numba inner loops for the splat rasterizer.

Every kernel operates on one rectangular pixel region with a depth-sorted
candidate list, so the tiled path and the untiled reference path execute the
exact same per-pixel instruction sequence (bit-identical outputs).

Per-pixel blending state (front to back), with alpha_i the clamped footprint:

    B_i   = B_{i-1} + (1 - A_{i-1}) * alpha_i * c_i
    A_i   = A_{i-1} + alpha_i * (1 - A_{i-1})
    dB_i  = dB_{i-1} + c_i * ((1 - A_{i-1}) * d(alpha_i) - dA_{i-1} * alpha_i)
    dA_i  = dA_{i-1} * (1 - alpha_i) + (1 - A_{i-1}) * d(alpha_i)

and the xy forms carry the two extra cross terms. The backward kernel walks
contributors back to front, reconstructing A_{k-1} from the stored terminal
state via algebraic inversion of the forward recurrence:

    A_{k-1}    = (A_k - alpha_k) / (1 - alpha_k)
    dA_{k-1}   = (dA_k - (1 - A_{k-1}) * d(alpha_k)) / (1 - alpha_k)
    dxyA_{k-1} = (dxyA_k - (1 - A_{k-1}) * dxy(alpha_k)
                  + dxA_{k-1} * dy(alpha_k) + dyA_{k-1} * dx(alpha_k)) / (1 - alpha_k)
"""

import numpy as np
from numba import njit

from .core import ALPHA_CLAMP, ALPHA_CULL, EARLY_TERMINATION

LOG_CULL = float(np.log(ALPHA_CULL))  # opacity < 1 so exponent below this culls


@njit(cache=True, nogil=True)
def forward_region(px0, px1, py0, py1, cand,
                   means, conics, sigmas, colors, bboxes, bg,
                   out_color, out_dx, out_dy, out_dxy,
                   out_alpha, out_adx, out_ady, out_adxy, out_count):
    """Blend candidates front-to-back over pixels [py0:py1) x [px0:px1)."""
    for py in range(py0, py1):
        cy = py + 0.5
        for px in range(px0, px1):
            cx = px + 0.5
            b0 = 0.0
            b1 = 0.0
            b2 = 0.0
            bx0 = 0.0
            bx1 = 0.0
            bx2 = 0.0
            by0 = 0.0
            by1 = 0.0
            by2 = 0.0
            bxy0 = 0.0
            bxy1 = 0.0
            bxy2 = 0.0
            acc = 0.0
            accx = 0.0
            accy = 0.0
            accxy = 0.0
            count = 0
            for ci in range(cand.shape[0]):
                g = cand[ci]
                if px < bboxes[g, 0] or px >= bboxes[g, 1]:
                    continue
                if py < bboxes[g, 2] or py >= bboxes[g, 3]:
                    continue
                dx = cx - means[g, 0]
                dy = cy - means[g, 1]
                ca = conics[g, 0]
                cb = conics[g, 1]
                cc = conics[g, 2]
                expo = -(ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy)
                if expo < LOG_CULL:
                    continue
                a_raw = sigmas[g] * np.exp(expo)
                if a_raw < ALPHA_CULL:
                    continue
                if a_raw > ALPHA_CLAMP:
                    alpha = ALPHA_CLAMP
                    ax = 0.0
                    ay = 0.0
                    axy = 0.0
                else:
                    alpha = a_raw
                    gx = -(2.0 * ca * dx + 2.0 * cb * dy)
                    gy = -(2.0 * cb * dx + 2.0 * cc * dy)
                    ax = alpha * gx
                    ay = alpha * gy
                    axy = alpha * (gx * gy - 2.0 * cb)
                t = 1.0 - acc
                bx0 += colors[g, 0] * (t * ax - accx * alpha)
                bx1 += colors[g, 1] * (t * ax - accx * alpha)
                bx2 += colors[g, 2] * (t * ax - accx * alpha)
                by0 += colors[g, 0] * (t * ay - accy * alpha)
                by1 += colors[g, 1] * (t * ay - accy * alpha)
                by2 += colors[g, 2] * (t * ay - accy * alpha)
                dxy_term = t * axy - accy * ax - accxy * alpha - accx * ay
                bxy0 += colors[g, 0] * dxy_term
                bxy1 += colors[g, 1] * dxy_term
                bxy2 += colors[g, 2] * dxy_term
                b0 += colors[g, 0] * (t * alpha)
                b1 += colors[g, 1] * (t * alpha)
                b2 += colors[g, 2] * (t * alpha)
                naccx = accx * (1.0 - alpha) + t * ax
                naccy = accy * (1.0 - alpha) + t * ay
                naccxy = accxy * (1.0 - alpha) + t * axy - accx * ay - accy * ax
                acc = acc + alpha * t
                accx = naccx
                accy = naccy
                accxy = naccxy
                count += 1
                if 1.0 - acc < EARLY_TERMINATION:
                    break
            t_final = 1.0 - acc
            out_color[py, px, 0] = b0 + t_final * bg[0]
            out_color[py, px, 1] = b1 + t_final * bg[1]
            out_color[py, px, 2] = b2 + t_final * bg[2]
            out_dx[py, px, 0] = bx0 - accx * bg[0]
            out_dx[py, px, 1] = bx1 - accx * bg[1]
            out_dx[py, px, 2] = bx2 - accx * bg[2]
            out_dy[py, px, 0] = by0 - accy * bg[0]
            out_dy[py, px, 1] = by1 - accy * bg[1]
            out_dy[py, px, 2] = by2 - accy * bg[2]
            out_dxy[py, px, 0] = bxy0 - accxy * bg[0]
            out_dxy[py, px, 1] = bxy1 - accxy * bg[1]
            out_dxy[py, px, 2] = bxy2 - accxy * bg[2]
            out_alpha[py, px] = acc
            out_adx[py, px] = accx
            out_ady[py, px] = accy
            out_adxy[py, px] = accxy
            out_count[py, px] = count


@njit(cache=True, nogil=True)
def backward_region(px0, px1, py0, py1, cand,
                    means, conics, sigmas, colors, bboxes, bg,
                    alpha_img, adx_img, ady_img, adxy_img, count_img,
                    w, wx, wy, wxy,
                    d_color, d_sigma, d_mean, d_conic):
    """Accumulate parameter gradients for one pixel region.

    Replays the forward contributor list per pixel, then sweeps it back to
    front maintaining the behind-color state and inverting the accumulated
    alpha state. Gradients land in the caller-provided per-region buffers.
    """
    ncand = cand.shape[0]
    s_idx = np.empty(ncand, dtype=np.int64)
    s_alpha = np.empty(ncand, dtype=np.float64)
    s_ax = np.empty(ncand, dtype=np.float64)
    s_ay = np.empty(ncand, dtype=np.float64)
    s_axy = np.empty(ncand, dtype=np.float64)
    s_clamped = np.empty(ncand, dtype=np.uint8)
    for py in range(py0, py1):
        cy = py + 0.5
        for px in range(px0, px1):
            cx = px + 0.5
            m = count_img[py, px]
            if m == 0:
                continue
            w0 = w[py, px, 0]
            w1 = w[py, px, 1]
            w2 = w[py, px, 2]
            wx0 = wx[py, px, 0]
            wx1 = wx[py, px, 1]
            wx2 = wx[py, px, 2]
            wy0 = wy[py, px, 0]
            wy1 = wy[py, px, 1]
            wy2 = wy[py, px, 2]
            wxy0 = wxy[py, px, 0]
            wxy1 = wxy[py, px, 1]
            wxy2 = wxy[py, px, 2]
            if (w0 == 0.0 and w1 == 0.0 and w2 == 0.0 and
                    wx0 == 0.0 and wx1 == 0.0 and wx2 == 0.0 and
                    wy0 == 0.0 and wy1 == 0.0 and wy2 == 0.0 and
                    wxy0 == 0.0 and wxy1 == 0.0 and wxy2 == 0.0):
                continue
            # replay the forward cull decisions to recover the contributor list
            n = 0
            for ci in range(ncand):
                if n >= m:
                    break
                g = cand[ci]
                if px < bboxes[g, 0] or px >= bboxes[g, 1]:
                    continue
                if py < bboxes[g, 2] or py >= bboxes[g, 3]:
                    continue
                dx = cx - means[g, 0]
                dy = cy - means[g, 1]
                ca = conics[g, 0]
                cb = conics[g, 1]
                cc = conics[g, 2]
                expo = -(ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy)
                if expo < LOG_CULL:
                    continue
                a_raw = sigmas[g] * np.exp(expo)
                if a_raw < ALPHA_CULL:
                    continue
                if a_raw > ALPHA_CLAMP:
                    s_alpha[n] = ALPHA_CLAMP
                    s_ax[n] = 0.0
                    s_ay[n] = 0.0
                    s_axy[n] = 0.0
                    s_clamped[n] = 1
                else:
                    gx = -(2.0 * ca * dx + 2.0 * cb * dy)
                    gy = -(2.0 * cb * dx + 2.0 * cc * dy)
                    s_alpha[n] = a_raw
                    s_ax[n] = a_raw * gx
                    s_ay[n] = a_raw * gy
                    s_axy[n] = a_raw * (gx * gy - 2.0 * cb)
                    s_clamped[n] = 0
                s_idx[n] = g
                n += 1
            # terminal accumulated-alpha state from the forward pass
            av = alpha_img[py, px]
            avx = adx_img[py, px]
            avy = ady_img[py, px]
            avxy = adxy_img[py, px]
            # behind-color state; the background acts as a virtual far splat
            bh0 = bg[0]
            bh1 = bg[1]
            bh2 = bg[2]
            bhx0 = 0.0
            bhx1 = 0.0
            bhx2 = 0.0
            bhy0 = 0.0
            bhy1 = 0.0
            bhy2 = 0.0
            bhxy0 = 0.0
            bhxy1 = 0.0
            bhxy2 = 0.0
            for k in range(n - 1, -1, -1):
                g = s_idx[k]
                alpha = s_alpha[k]
                ax = s_ax[k]
                ay = s_ay[k]
                axy = s_axy[k]
                om = 1.0 - alpha
                a_prev = (av - alpha) / om
                t = 1.0 - a_prev
                ax_prev = (avx - t * ax) / om
                ay_prev = (avy - t * ay) / om
                axy_prev = (avxy - t * axy + ax_prev * ay + ay_prev * ax) / om
                abar = 0.0
                abar_x = 0.0
                abar_y = 0.0
                abar_xy = 0.0
                # channel 0
                diff = colors[g, 0] - bh0
                u0 = t * diff
                u1 = -ax_prev * diff - t * bhx0
                u2 = -ay_prev * diff - t * bhy0
                u3 = -axy_prev * diff + ax_prev * bhy0 + ay_prev * bhx0 - t * bhxy0
                d_color[g, 0] += (w0 * (t * alpha)
                                  + wx0 * (t * ax - ax_prev * alpha)
                                  + wy0 * (t * ay - ay_prev * alpha)
                                  + wxy0 * (t * axy - axy_prev * alpha
                                            - ay_prev * ax - ax_prev * ay))
                abar += w0 * u0 + wx0 * u1 + wy0 * u2 + wxy0 * u3
                abar_x += wx0 * u0 + wxy0 * u2
                abar_y += wy0 * u0 + wxy0 * u1
                abar_xy += wxy0 * u0
                # channel 1
                diff = colors[g, 1] - bh1
                u0 = t * diff
                u1 = -ax_prev * diff - t * bhx1
                u2 = -ay_prev * diff - t * bhy1
                u3 = -axy_prev * diff + ax_prev * bhy1 + ay_prev * bhx1 - t * bhxy1
                d_color[g, 1] += (w1 * (t * alpha)
                                  + wx1 * (t * ax - ax_prev * alpha)
                                  + wy1 * (t * ay - ay_prev * alpha)
                                  + wxy1 * (t * axy - axy_prev * alpha
                                            - ay_prev * ax - ax_prev * ay))
                abar += w1 * u0 + wx1 * u1 + wy1 * u2 + wxy1 * u3
                abar_x += wx1 * u0 + wxy1 * u2
                abar_y += wy1 * u0 + wxy1 * u1
                abar_xy += wxy1 * u0
                # channel 2
                diff = colors[g, 2] - bh2
                u0 = t * diff
                u1 = -ax_prev * diff - t * bhx2
                u2 = -ay_prev * diff - t * bhy2
                u3 = -axy_prev * diff + ax_prev * bhy2 + ay_prev * bhx2 - t * bhxy2
                d_color[g, 2] += (w2 * (t * alpha)
                                  + wx2 * (t * ax - ax_prev * alpha)
                                  + wy2 * (t * ay - ay_prev * alpha)
                                  + wxy2 * (t * axy - axy_prev * alpha
                                            - ay_prev * ax - ax_prev * ay))
                abar += w2 * u0 + wx2 * u1 + wy2 * u2 + wxy2 * u3
                abar_x += wx2 * u0 + wxy2 * u2
                abar_y += wy2 * u0 + wxy2 * u1
                abar_xy += wxy2 * u0
                if s_clamped[k] == 0:
                    dx = cx - means[g, 0]
                    dy = cy - means[g, 1]
                    ca = conics[g, 0]
                    cb = conics[g, 1]
                    cc = conics[g, 2]
                    gx = -(2.0 * ca * dx + 2.0 * cb * dy)
                    gy = -(2.0 * cb * dx + 2.0 * cc * dy)
                    gxy = -2.0 * cb
                    hxy = gx * gy + gxy
                    d_sigma[g] += (abar * alpha + abar_x * ax
                                   + abar_y * ay + abar_xy * axy) / sigmas[g]
                    # d/dp of (alpha, ax, ay, axy) for p in (mu_x, mu_y, a, b, c),
                    # each defined by its effect on the exponent and its gradient:
                    #   d alpha = alpha * G_p
                    #   d ax    = alpha * (G_p * gx + Gx_p)        (ay analogous)
                    #   d axy   = alpha * (G_p * hxy + Gx_p * gy + gx * Gy_p + Gxy_p)
                    # mu_x: (G_p, Gx_p, Gy_p, Gxy_p) = (-gx, 2a, 2b, 0)
                    d_mean[g, 0] += alpha * (abar * (-gx)
                                             + abar_x * (-gx * gx + 2.0 * ca)
                                             + abar_y * (-gx * gy + 2.0 * cb)
                                             + abar_xy * (-gx * hxy + 2.0 * ca * gy
                                                          + 2.0 * cb * gx))
                    # mu_y: (-gy, 2b, 2c, 0)
                    d_mean[g, 1] += alpha * (abar * (-gy)
                                             + abar_x * (-gy * gx + 2.0 * cb)
                                             + abar_y * (-gy * gy + 2.0 * cc)
                                             + abar_xy * (-gy * hxy + 2.0 * cb * gy
                                                          + 2.0 * cc * gx))
                    # a: (-dx^2, -2dx, 0, 0)
                    d_conic[g, 0] += alpha * (abar * (-dx * dx)
                                              + abar_x * (-dx * dx * gx - 2.0 * dx)
                                              + abar_y * (-dx * dx * gy)
                                              + abar_xy * (-dx * dx * hxy - 2.0 * dx * gy))
                    # b: (-2dxdy, -2dy, -2dx, -2)
                    d_conic[g, 1] += alpha * (abar * (-2.0 * dx * dy)
                                              + abar_x * (-2.0 * dx * dy * gx - 2.0 * dy)
                                              + abar_y * (-2.0 * dx * dy * gy - 2.0 * dx)
                                              + abar_xy * (-2.0 * dx * dy * hxy
                                                           - 2.0 * dy * gy - 2.0 * gx * dx
                                                           - 2.0))
                    # c: (-dy^2, 0, -2dy, 0)
                    d_conic[g, 2] += alpha * (abar * (-dy * dy)
                                              + abar_x * (-dy * dy * gx)
                                              + abar_y * (-dy * dy * gy - 2.0 * dy)
                                              + abar_xy * (-dy * dy * hxy - 2.0 * dy * gx))
                # advance the behind-color state through this splat
                nbhx0 = om * bhx0 + ax * (colors[g, 0] - bh0)
                nbhx1 = om * bhx1 + ax * (colors[g, 1] - bh1)
                nbhx2 = om * bhx2 + ax * (colors[g, 2] - bh2)
                nbhy0 = om * bhy0 + ay * (colors[g, 0] - bh0)
                nbhy1 = om * bhy1 + ay * (colors[g, 1] - bh1)
                nbhy2 = om * bhy2 + ay * (colors[g, 2] - bh2)
                nbhxy0 = (om * bhxy0 + axy * (colors[g, 0] - bh0)
                          - ay * bhx0 - ax * bhy0)
                nbhxy1 = (om * bhxy1 + axy * (colors[g, 1] - bh1)
                          - ay * bhx1 - ax * bhy1)
                nbhxy2 = (om * bhxy2 + axy * (colors[g, 2] - bh2)
                          - ay * bhx2 - ax * bhy2)
                bh0 = om * bh0 + alpha * colors[g, 0]
                bh1 = om * bh1 + alpha * colors[g, 1]
                bh2 = om * bh2 + alpha * colors[g, 2]
                bhx0 = nbhx0
                bhx1 = nbhx1
                bhx2 = nbhx2
                bhy0 = nbhy0
                bhy1 = nbhy1
                bhy2 = nbhy2
                bhxy0 = nbhxy0
                bhxy1 = nbhxy1
                bhxy2 = nbhxy2
                av = a_prev
                avx = ax_prev
                avy = ay_prev
                avxy = axy_prev
