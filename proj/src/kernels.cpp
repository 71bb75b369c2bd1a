#include <atomic>
#include <cstdlib>

#include "senca/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace senca::kern {

namespace {

std::atomic<int> g_max_threads{0};  // 0 = not initialized

int default_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Work sizes below these run serially; the fork/join overhead dominates.
constexpr long long kMatmulFlopCutoff = 1 << 15;
constexpr size_t kElementCutoff = 1 << 13;

inline bool par_on(long long work, long long cutoff) {
    return max_threads() > 1 && work >= cutoff;
}

}  // namespace

int max_threads() {
    int v = g_max_threads.load(std::memory_order_relaxed);
    if (v == 0) {
        v = default_threads();
        g_max_threads.store(v, std::memory_order_relaxed);
    }
    return v;
}

void set_max_threads(int n) {
    if (n < 1) n = 1;
    g_max_threads.store(n, std::memory_order_relaxed);
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
}

void init_threads_from_env() {
    const char* env = std::getenv("SENCA_THREADS");
    if (env != nullptr) {
        int n = std::atoi(env);
        if (n >= 1) set_max_threads(n);
    }
}

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
    if (par_on(1LL * m * k * n, kMatmulFlopCutoff))
        par::matmul_nn(a, b, c, m, k, n, accumulate);
    else
        serial::matmul_nn(a, b, c, m, k, n, accumulate);
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
    if (par_on(1LL * m * k * n, kMatmulFlopCutoff))
        par::matmul_nt(a, b, c, m, k, n, accumulate);
    else
        serial::matmul_nt(a, b, c, m, k, n, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
    if (par_on(1LL * m * k * n, kMatmulFlopCutoff))
        par::matmul_tn(a, b, c, m, k, n, accumulate);
    else
        serial::matmul_tn(a, b, c, m, k, n, accumulate);
}

void add(const double* a, const double* b, double* c, size_t n) {
    if (par_on(static_cast<long long>(n), kElementCutoff))
        par::add(a, b, c, n);
    else
        serial::add(a, b, c, n);
}

void sub(const double* a, const double* b, double* c, size_t n) {
    if (par_on(static_cast<long long>(n), kElementCutoff))
        par::sub(a, b, c, n);
    else
        serial::sub(a, b, c, n);
}

void mul(const double* a, const double* b, double* c, size_t n) {
    if (par_on(static_cast<long long>(n), kElementCutoff))
        par::mul(a, b, c, n);
    else
        serial::mul(a, b, c, n);
}

void scale(const double* a, double s, double* c, size_t n) {
    if (par_on(static_cast<long long>(n), kElementCutoff))
        par::scale(a, s, c, n);
    else
        serial::scale(a, s, c, n);
}

void acc(const double* g, double* dst, size_t n) {
    if (par_on(static_cast<long long>(n), kElementCutoff))
        par::acc(g, dst, n);
    else
        serial::acc(g, dst, n);
}

void acc_scaled(const double* g, double s, double* dst, size_t n) {
    if (par_on(static_cast<long long>(n), kElementCutoff))
        par::acc_scaled(g, s, dst, n);
    else
        serial::acc_scaled(g, s, dst, n);
}

void acc_mul(const double* g, const double* b, double* dst, size_t n) {
    if (par_on(static_cast<long long>(n), kElementCutoff))
        par::acc_mul(g, b, dst, n);
    else
        serial::acc_mul(g, b, dst, n);
}

void elu(const double* x, double* y, size_t n) {
    if (par_on(static_cast<long long>(n), kElementCutoff))
        par::elu(x, y, n);
    else
        serial::elu(x, y, n);
}

void elu_backward(const double* x, const double* g, double* dx, size_t n) {
    if (par_on(static_cast<long long>(n), kElementCutoff))
        par::elu_backward(x, g, dx, n);
    else
        serial::elu_backward(x, g, dx, n);
}

void softmax_rows(const double* x, double* y, int m, int n) {
    if (par_on(1LL * m * n, kElementCutoff))
        par::softmax_rows(x, y, m, n);
    else
        serial::softmax_rows(x, y, m, n);
}

void softmax_rows_backward(const double* y, const double* g, double* dx, int m, int n) {
    if (par_on(1LL * m * n, kElementCutoff))
        par::softmax_rows_backward(y, g, dx, m, n);
    else
        serial::softmax_rows_backward(y, g, dx, m, n);
}

void layer_norm_rows(const double* x, const double* gain, const double* bias, double* y,
                     double* xhat, double* inv_sd, int m, int n, double eps) {
    if (par_on(1LL * m * n, kElementCutoff))
        par::layer_norm_rows(x, gain, bias, y, xhat, inv_sd, m, n, eps);
    else
        serial::layer_norm_rows(x, gain, bias, y, xhat, inv_sd, m, n, eps);
}

void layer_norm_rows_backward_x(const double* xhat, const double* inv_sd, const double* gain,
                                const double* g, double* dx, int m, int n) {
    if (par_on(1LL * m * n, kElementCutoff))
        par::layer_norm_rows_backward_x(xhat, inv_sd, gain, g, dx, m, n);
    else
        serial::layer_norm_rows_backward_x(xhat, inv_sd, gain, g, dx, m, n);
}

void logsumexp_rows(const double* x, double* y, int m, int n) {
    if (par_on(1LL * m * n, kElementCutoff))
        par::logsumexp_rows(x, y, m, n);
    else
        serial::logsumexp_rows(x, y, m, n);
}

void logsumexp_rows_backward(const double* x, const double* lse, const double* g, double* dx,
                             int m, int n) {
    if (par_on(1LL * m * n, kElementCutoff))
        par::logsumexp_rows_backward(x, lse, g, dx, m, n);
    else
        serial::logsumexp_rows_backward(x, lse, g, dx, m, n);
}

void l2_normalize_rows(const double* x, double* y, double* norms, int m, int n) {
    if (par_on(1LL * m * n, kElementCutoff))
        par::l2_normalize_rows(x, y, norms, m, n);
    else
        serial::l2_normalize_rows(x, y, norms, m, n);
}

void l2_normalize_rows_backward(const double* y, const double* norms, const double* g,
                                double* dx, int m, int n) {
    if (par_on(1LL * m * n, kElementCutoff))
        par::l2_normalize_rows_backward(y, norms, g, dx, m, n);
    else
        serial::l2_normalize_rows_backward(y, norms, g, dx, m, n);
}

}  // namespace senca::kern
