#pragma once

#include <cstddef>

namespace tracklab {

// Dense kernels behind the autodiff graph. The omp versions parallelize over
// independent output entries only — each entry is one serial dot product —
// so results are bit-identical to the serial reference for any thread count.
namespace kernels {

// C(BxN) = A(BxK) * W(KxN), row-major; C is overwritten.
void matmul(const double* A, const double* W, double* C, int B, int K, int N);

// C(BxK) += G(BxN) * W^T(NxK)   (input-gradient of matmul)
void matmul_bt_acc(const double* G, const double* W, double* C, int B, int K, int N);

// C(KxN) += A^T(KxB) * G(BxN)   (weight-gradient of matmul)
void matmul_at_acc(const double* A, const double* G, double* C, int B, int K, int N);

// out(B, T_out*OC) = conv1d over rows of x(B, T*IC), kernel w(OC, IC*KS),
// stride s. Time-major channel-minor layout.
void conv1d(const double* x, const double* w, const double* bias, double* out,
            int B, int T, int IC, int OC, int KS, int stride);

void conv1d_backward(const double* x, const double* w, const double* gout,
                     double* gx, double* gw, double* gbias, int B, int T, int IC,
                     int OC, int KS, int stride);

}  // namespace kernels

// Plain serial implementations kept as the reference for testing and for the
// kernel benchmark.
namespace kernels_serial {

void matmul(const double* A, const double* W, double* C, int B, int K, int N);
void matmul_bt_acc(const double* G, const double* W, double* C, int B, int K, int N);
void matmul_at_acc(const double* A, const double* G, double* C, int B, int K, int N);
void conv1d(const double* x, const double* w, const double* bias, double* out,
            int B, int T, int IC, int OC, int KS, int stride);

}  // namespace kernels_serial

}  // namespace tracklab
