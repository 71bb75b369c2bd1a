#include <algorithm>
#include <cmath>
#include <cstring>

#include "senca/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

// OpenMP variants. Work is split across rows (or element ranges); every
// output element is written by exactly one thread using the same inner-loop
// order as the serial reference, so results match the reference bitwise.

namespace senca::kern::par {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* ci = c + static_cast<size_t>(i) * n;
        if (!accumulate) std::memset(ci, 0, sizeof(double) * n);
        for (int kk = 0; kk < k; ++kk) {
            double av = ai[kk];
            const double* bk = b + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* ci = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<size_t>(j) * k;
            double s = 0.0;
            for (int kk = 0; kk < k; ++kk) s += ai[kk] * bj[kk];
            if (accumulate)
                ci[j] += s;
            else
                ci[j] = s;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<size_t>(i) * n;
        if (!accumulate) std::memset(ci, 0, sizeof(double) * n);
        for (int kk = 0; kk < k; ++kk) {
            double av = a[static_cast<size_t>(kk) * m + i];
            const double* bk = b + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

void add(const double* a, const double* b, double* c, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) c[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* c, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) c[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* c, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) c[i] = a[i] * b[i];
}

void scale(const double* a, double s, double* c, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) c[i] = a[i] * s;
}

void acc(const double* g, double* dst, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) dst[i] += g[i];
}

void acc_scaled(const double* g, double s, double* dst, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) dst[i] += g[i] * s;
}

void acc_mul(const double* g, const double* b, double* dst, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) dst[i] += g[i] * b[i];
}

void elu(const double* x, double* y, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        y[i] = x[i] >= 0.0 ? x[i] : std::expm1(x[i]);
}

void elu_backward(const double* x, const double* g, double* dx, size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        dx[i] += g[i] * (x[i] >= 0.0 ? 1.0 : std::exp(x[i]));
}

void softmax_rows(const double* x, double* y, int m, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* xi = x + static_cast<size_t>(i) * n;
        double* yi = y + static_cast<size_t>(i) * n;
        double mx = xi[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            yi[j] = std::exp(xi[j] - mx);
            sum += yi[j];
        }
        double inv = 1.0 / sum;
        for (int j = 0; j < n; ++j) yi[j] *= inv;
    }
}

void softmax_rows_backward(const double* y, const double* g, double* dx, int m, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* yi = y + static_cast<size_t>(i) * n;
        const double* gi = g + static_cast<size_t>(i) * n;
        double* di = dx + static_cast<size_t>(i) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += gi[j] * yi[j];
        for (int j = 0; j < n; ++j) di[j] += yi[j] * (gi[j] - dot);
    }
}

void layer_norm_rows(const double* x, const double* gain, const double* bias, double* y,
                     double* xhat, double* inv_sd, int m, int n, double eps) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* xi = x + static_cast<size_t>(i) * n;
        double* yi = y + static_cast<size_t>(i) * n;
        double* hi = xhat + static_cast<size_t>(i) * n;
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += xi[j];
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            double d = xi[j] - mean;
            var += d * d;
        }
        var /= n;
        double isd = 1.0 / std::sqrt(var + eps);
        inv_sd[i] = isd;
        for (int j = 0; j < n; ++j) {
            hi[j] = (xi[j] - mean) * isd;
            yi[j] = gain[j] * hi[j] + bias[j];
        }
    }
}

void layer_norm_rows_backward_x(const double* xhat, const double* inv_sd, const double* gain,
                                const double* g, double* dx, int m, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* hi = xhat + static_cast<size_t>(i) * n;
        const double* gi = g + static_cast<size_t>(i) * n;
        double* di = dx + static_cast<size_t>(i) * n;
        double sum_dh = 0.0, sum_dh_h = 0.0;
        for (int j = 0; j < n; ++j) {
            double dh = gi[j] * gain[j];
            sum_dh += dh;
            sum_dh_h += dh * hi[j];
        }
        double mean_dh = sum_dh / n;
        double mean_dh_h = sum_dh_h / n;
        for (int j = 0; j < n; ++j) {
            double dh = gi[j] * gain[j];
            di[j] += inv_sd[i] * (dh - mean_dh - hi[j] * mean_dh_h);
        }
    }
}

void logsumexp_rows(const double* x, double* y, int m, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* xi = x + static_cast<size_t>(i) * n;
        double mx = xi[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += std::exp(xi[j] - mx);
        y[i] = mx + std::log(sum);
    }
}

void logsumexp_rows_backward(const double* x, const double* lse, const double* g, double* dx,
                             int m, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* xi = x + static_cast<size_t>(i) * n;
        double* di = dx + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) di[j] += g[i] * std::exp(xi[j] - lse[i]);
    }
}

void l2_normalize_rows(const double* x, double* y, double* norms, int m, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* xi = x + static_cast<size_t>(i) * n;
        double* yi = y + static_cast<size_t>(i) * n;
        double ss = 0.0;
        for (int j = 0; j < n; ++j) ss += xi[j] * xi[j];
        double r = std::max(std::sqrt(ss), 1e-12);
        norms[i] = r;
        double inv = 1.0 / r;
        for (int j = 0; j < n; ++j) yi[j] = xi[j] * inv;
    }
}

void l2_normalize_rows_backward(const double* y, const double* norms, const double* g,
                                double* dx, int m, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* yi = y + static_cast<size_t>(i) * n;
        const double* gi = g + static_cast<size_t>(i) * n;
        double* di = dx + static_cast<size_t>(i) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += gi[j] * yi[j];
        double inv = 1.0 / norms[i];
        for (int j = 0; j < n; ++j) di[j] += (gi[j] - yi[j] * dot) * inv;
    }
}

}  // namespace senca::kern::par
