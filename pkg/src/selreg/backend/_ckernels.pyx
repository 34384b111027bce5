# cython: boundscheck=False, wraparound=False, cdivision=True
# Compiled implementations of the hot kernels; contracts in backend/__init__.py.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp
from libc.stdlib cimport free, malloc

cnp.import_array()


cdef inline double _sq_dist(const double* q, const double* p, Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0, diff
    cdef Py_ssize_t j
    for j in range(d):
        diff = q[j] - p[j]
        acc += diff * diff
    return acc


def pairwise_sq_dists(object queries, object points):
    cdef cnp.ndarray[double, ndim=2, mode="c"] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t nq = Q.shape[0], m = P.shape[0], d = Q.shape[1]
    if P.shape[1] != d:
        raise ValueError("dimension mismatch between queries and points")
    cdef cnp.ndarray[double, ndim=2, mode="c"] out = np.empty((nq, m), dtype=np.float64)
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(nq):
            for j in range(m):
                out[i, j] = _sq_dist(&Q[i, 0], &P[j, 0], d)
    return out


def knn_mean(object queries, object points, object values, object k):
    # Maintains the k best (distance, index) pairs by replacing the current
    # lexicographic maximum; a tie with the worst distance never displaces a
    # stored point, so equal distances resolve to the lower point index.
    cdef cnp.ndarray[double, ndim=2, mode="c"] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] V = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t kk = <Py_ssize_t> k
    cdef Py_ssize_t nq = Q.shape[0], m = P.shape[0], d = Q.shape[1]
    if P.shape[1] != d:
        raise ValueError("dimension mismatch between queries and points")
    if V.shape[0] != m:
        raise ValueError("values length must match point count")
    if kk < 1 or kk > m:
        raise ValueError("k out of range")
    cdef cnp.ndarray[double, ndim=1, mode="c"] out = np.empty(nq, dtype=np.float64)
    cdef double* kd = <double*> malloc(kk * sizeof(double))
    cdef Py_ssize_t* ki = <Py_ssize_t*> malloc(kk * sizeof(Py_ssize_t))
    if kd == NULL or ki == NULL:
        free(kd)
        free(ki)
        raise MemoryError()
    cdef Py_ssize_t i, j, t, worst
    cdef double dist, acc
    try:
        with nogil:
            for i in range(nq):
                worst = 0
                for j in range(kk):
                    kd[j] = _sq_dist(&Q[i, 0], &P[j, 0], d)
                    ki[j] = j
                    if kd[j] > kd[worst] or (kd[j] == kd[worst] and ki[j] > ki[worst]):
                        worst = j
                for j in range(kk, m):
                    dist = _sq_dist(&Q[i, 0], &P[j, 0], d)
                    if dist < kd[worst]:
                        kd[worst] = dist
                        ki[worst] = j
                        worst = 0
                        for t in range(1, kk):
                            if kd[t] > kd[worst] or (kd[t] == kd[worst] and ki[t] > ki[worst]):
                                worst = t
                acc = 0.0
                for j in range(kk):
                    acc += V[ki[j]]
                out[i] = acc / kk
    finally:
        free(kd)
        free(ki)
    return out


def gaussian_nw(object queries, object centers, object values, object sigma):
    cdef cnp.ndarray[double, ndim=2, mode="c"] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] C = np.ascontiguousarray(centers, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] V = np.ascontiguousarray(values, dtype=np.float64)
    cdef double s = <double> sigma
    cdef Py_ssize_t nq = Q.shape[0], m = C.shape[0], d = Q.shape[1]
    if C.shape[1] != d:
        raise ValueError("dimension mismatch between queries and centers")
    if V.shape[0] != m:
        raise ValueError("values length must match center count")
    if s <= 0.0:
        raise ValueError("sigma must be positive")
    cdef cnp.ndarray[double, ndim=1, mode="c"] out = np.empty(nq, dtype=np.float64)
    cdef Py_ssize_t i, j, nearest
    cdef double dist, w, num, den, best
    with nogil:
        for i in range(nq):
            num = 0.0
            den = 0.0
            nearest = 0
            best = _sq_dist(&Q[i, 0], &C[0, 0], d)
            for j in range(m):
                dist = _sq_dist(&Q[i, 0], &C[j, 0], d)
                if dist < best:
                    best = dist
                    nearest = j
                w = exp(-dist / s)
                num += w * V[j]
                den += w
            if den > 0.0:
                out[i] = num / den
            else:
                out[i] = V[nearest]
    return out
