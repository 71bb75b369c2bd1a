#pragma once

#include <cstddef>

// Dense kernels behind the autograd ops. Every kernel exists twice: a plain
// serial reference under kern::serial and an OpenMP version under kern::par.
// The top-level functions dispatch between them based on the thread cap and
// problem size. Parallel variants assign each output element to exactly one
// thread with the same inner-loop order as the reference, so both variants
// produce bitwise-identical results for any thread count.
namespace senca::kern {

int max_threads();
void set_max_threads(int n);

// Reads the SENCA_THREADS environment variable (if set) into the thread cap.
void init_threads_from_env();

namespace serial {

// C[m x n] = A[m x k] * B[k x n]; accumulate adds into C instead.
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
// C[m x n] = A[m x k] * B[n x k]^T
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
// C[m x n] = A[k x m]^T * B[k x n]
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);

void add(const double* a, const double* b, double* c, size_t n);
void sub(const double* a, const double* b, double* c, size_t n);
void mul(const double* a, const double* b, double* c, size_t n);
void scale(const double* a, double s, double* c, size_t n);

// dst += g, dst += s*g, dst += g.*b
void acc(const double* g, double* dst, size_t n);
void acc_scaled(const double* g, double s, double* dst, size_t n);
void acc_mul(const double* g, const double* b, double* dst, size_t n);

void elu(const double* x, double* y, size_t n);
void elu_backward(const double* x, const double* g, double* dx, size_t n);

void softmax_rows(const double* x, double* y, int m, int n);
// dx += y .* (g - rowdot(g, y))
void softmax_rows_backward(const double* y, const double* g, double* dx, int m, int n);

// y = gain .* (x - mean) * inv_sd + bias per row; xhat/inv_sd are emitted for
// the backward pass (xhat: m x n, inv_sd: m).
void layer_norm_rows(const double* x, const double* gain, const double* bias, double* y,
                     double* xhat, double* inv_sd, int m, int n, double eps);
void layer_norm_rows_backward_x(const double* xhat, const double* inv_sd, const double* gain,
                                const double* g, double* dx, int m, int n);

void logsumexp_rows(const double* x, double* y, int m, int n);
void logsumexp_rows_backward(const double* x, const double* lse, const double* g, double* dx,
                             int m, int n);

void l2_normalize_rows(const double* x, double* y, double* norms, int m, int n);
void l2_normalize_rows_backward(const double* y, const double* norms, const double* g,
                                double* dx, int m, int n);

}  // namespace serial

namespace par {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);

void add(const double* a, const double* b, double* c, size_t n);
void sub(const double* a, const double* b, double* c, size_t n);
void mul(const double* a, const double* b, double* c, size_t n);
void scale(const double* a, double s, double* c, size_t n);

void acc(const double* g, double* dst, size_t n);
void acc_scaled(const double* g, double s, double* dst, size_t n);
void acc_mul(const double* g, const double* b, double* dst, size_t n);

void elu(const double* x, double* y, size_t n);
void elu_backward(const double* x, const double* g, double* dx, size_t n);

void softmax_rows(const double* x, double* y, int m, int n);
void softmax_rows_backward(const double* y, const double* g, double* dx, int m, int n);

void layer_norm_rows(const double* x, const double* gain, const double* bias, double* y,
                     double* xhat, double* inv_sd, int m, int n, double eps);
void layer_norm_rows_backward_x(const double* xhat, const double* inv_sd, const double* gain,
                                const double* g, double* dx, int m, int n);

void logsumexp_rows(const double* x, double* y, int m, int n);
void logsumexp_rows_backward(const double* x, const double* lse, const double* g, double* dx,
                             int m, int n);

void l2_normalize_rows(const double* x, double* y, double* norms, int m, int n);
void l2_normalize_rows_backward(const double* y, const double* norms, const double* g,
                                double* dx, int m, int n);

}  // namespace par

// Dispatching entry points used by the rest of the library.
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);

void add(const double* a, const double* b, double* c, size_t n);
void sub(const double* a, const double* b, double* c, size_t n);
void mul(const double* a, const double* b, double* c, size_t n);
void scale(const double* a, double s, double* c, size_t n);

void acc(const double* g, double* dst, size_t n);
void acc_scaled(const double* g, double s, double* dst, size_t n);
void acc_mul(const double* g, const double* b, double* dst, size_t n);

void elu(const double* x, double* y, size_t n);
void elu_backward(const double* x, const double* g, double* dx, size_t n);

void softmax_rows(const double* x, double* y, int m, int n);
void softmax_rows_backward(const double* y, const double* g, double* dx, int m, int n);

void layer_norm_rows(const double* x, const double* gain, const double* bias, double* y,
                     double* xhat, double* inv_sd, int m, int n, double eps);
void layer_norm_rows_backward_x(const double* xhat, const double* inv_sd, const double* gain,
                                const double* g, double* dx, int m, int n);

void logsumexp_rows(const double* x, double* y, int m, int n);
void logsumexp_rows_backward(const double* x, const double* lse, const double* g, double* dx,
                             int m, int n);

void l2_normalize_rows(const double* x, double* y, double* norms, int m, int n);
void l2_normalize_rows_backward(const double* y, const double* norms, const double* g,
                                double* dx, int m, int n);

}  // namespace senca::kern
