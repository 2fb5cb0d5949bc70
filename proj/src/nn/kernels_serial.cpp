#include "tracklab/nn/kernels.hpp"

namespace tracklab::kernels_serial {

void matmul(const double* A, const double* W, double* C, int B, int K, int N) {
  for (int i = 0; i < B; ++i) {
    const double* a = A + static_cast<size_t>(i) * K;
    double* c = C + static_cast<size_t>(i) * N;
    for (int j = 0; j < N; ++j) c[j] = 0.0;
    for (int k = 0; k < K; ++k) {
      const double av = a[k];
      const double* w = W + static_cast<size_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += av * w[j];
    }
  }
}

void matmul_bt_acc(const double* G, const double* W, double* C, int B, int K, int N) {
  for (int i = 0; i < B; ++i) {
    const double* g = G + static_cast<size_t>(i) * N;
    double* c = C + static_cast<size_t>(i) * K;
    for (int k = 0; k < K; ++k) {
      const double* w = W + static_cast<size_t>(k) * N;
      double acc = 0.0;
      for (int j = 0; j < N; ++j) acc += g[j] * w[j];
      c[k] += acc;
    }
  }
}

void matmul_at_acc(const double* A, const double* G, double* C, int B, int K, int N) {
  for (int k = 0; k < K; ++k) {
    double* c = C + static_cast<size_t>(k) * N;
    for (int j = 0; j < N; ++j) {
      double acc = 0.0;
      for (int i = 0; i < B; ++i) {
        acc += A[static_cast<size_t>(i) * K + k] * G[static_cast<size_t>(i) * N + j];
      }
      c[j] += acc;
    }
  }
}

void conv1d(const double* x, const double* w, const double* bias, double* out,
            int B, int T, int IC, int OC, int KS, int stride) {
  const int t_out = (T - KS) / stride + 1;
  for (int b = 0; b < B; ++b) {
    const double* xb = x + static_cast<size_t>(b) * T * IC;
    double* ob = out + static_cast<size_t>(b) * t_out * OC;
    for (int to = 0; to < t_out; ++to) {
      for (int oc = 0; oc < OC; ++oc) {
        double acc = bias ? bias[oc] : 0.0;
        const double* wk = w + static_cast<size_t>(oc) * IC * KS;
        for (int ks = 0; ks < KS; ++ks) {
          const double* xt = xb + static_cast<size_t>(to * stride + ks) * IC;
          for (int ic = 0; ic < IC; ++ic) acc += wk[ks * IC + ic] * xt[ic];
        }
        ob[to * OC + oc] = acc;
      }
    }
  }
}

}  // namespace tracklab::kernels_serial
