"""Numba kernels for the sequential gradient-descent sweeps.

Both factorizations update per rating, in ascending index order: a user
sweep visits users 0..U-1 and, within each user, their rated items in
ascending item order, touching only that user's row (item factors fixed);
the item sweep then mirrors it. The strict ordering plus fastmath being
off makes training bit-reproducible for a given seed.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def pmf_iteration(u_indptr, u_items, u_values, i_indptr, i_users, i_values,
                  P, Q, lr, reg):
    num_users, k = P.shape
    for u in range(num_users):
        for e in range(u_indptr[u], u_indptr[u + 1]):
            i = u_items[e]
            pred = 0.0
            for kk in range(k):
                pred += P[u, kk] * Q[i, kk]
            err = u_values[e] - pred
            for kk in range(k):
                P[u, kk] += lr * (2.0 * err * Q[i, kk] - reg * P[u, kk])
    num_items = Q.shape[0]
    for i in range(num_items):
        for e in range(i_indptr[i], i_indptr[i + 1]):
            u = i_users[e]
            pred = 0.0
            for kk in range(k):
                pred += P[u, kk] * Q[i, kk]
            err = i_values[e] - pred
            for kk in range(k):
                Q[i, kk] += lr * (2.0 * err * P[u, kk] - reg * Q[i, kk])


@njit(cache=True)
def biasedmf_iteration(u_indptr, u_items, u_values, i_indptr, i_users,
                       i_values, P, Q, bu, bi, mu, lr, reg):
    num_users, k = P.shape
    for u in range(num_users):
        for e in range(u_indptr[u], u_indptr[u + 1]):
            i = u_items[e]
            pred = mu + bu[u] + bi[i]
            for kk in range(k):
                pred += P[u, kk] * Q[i, kk]
            err = u_values[e] - pred
            bu[u] += lr * (err - reg * bu[u])
            for kk in range(k):
                P[u, kk] += lr * (err * Q[i, kk] - reg * P[u, kk])
    num_items = Q.shape[0]
    for i in range(num_items):
        for e in range(i_indptr[i], i_indptr[i + 1]):
            u = i_users[e]
            pred = mu + bu[u] + bi[i]
            for kk in range(k):
                pred += P[u, kk] * Q[i, kk]
            err = i_values[e] - pred
            bi[i] += lr * (err - reg * bi[i])
            for kk in range(k):
                Q[i, kk] += lr * (err * P[u, kk] - reg * Q[i, kk])
