#include "tracklab/nn/graph.hpp"

#include <cmath>
#include <stdexcept>

#include "tracklab/nn/kernels.hpp"

namespace tracklab {

namespace {

constexpr double kGsPivotEps = 1e-8;

// Core per-sample Gram-Schmidt over M feature vectors of dim d stored
// contiguously: u = [u_1 .. u_M]. Writes v in the same layout plus the
// pivot norms, projection coefficients (row-major MxM, lower triangle used)
// and fallback flags.
int gs_forward_row(const double* u, double* v, double* norms, double* coef,
                   double* fallback, int m, int d) {
  int fallbacks = 0;
  std::vector<double> w(d);
  for (int i = 0; i < m; ++i) {
    const double* ui = u + i * d;
    for (int k = 0; k < d; ++k) w[k] = ui[k];
    for (int j = 0; j < i; ++j) {
      const double* vj = v + j * d;
      double c = 0.0;
      for (int k = 0; k < d; ++k) c += vj[k] * ui[k];
      coef[i * m + j] = c;
      for (int k = 0; k < d; ++k) w[k] -= c * vj[k];
    }
    double n = 0.0;
    for (int k = 0; k < d; ++k) n += w[k] * w[k];
    n = std::sqrt(n);
    double* vi = v + i * d;
    if (n <= kGsPivotEps) {
      // Degenerate pivot: re-seed from the first basis direction that stays
      // independent of the columns already produced.
      fallback[i] = 1.0;
      ++fallbacks;
      bool found = false;
      for (int e = 0; e < d && !found; ++e) {
        for (int k = 0; k < d; ++k) w[k] = (k == e) ? 1.0 : 0.0;
        for (int j = 0; j < i; ++j) {
          const double* vj = v + j * d;
          const double c = vj[e];
          for (int k = 0; k < d; ++k) w[k] -= c * vj[k];
        }
        double n2 = 0.0;
        for (int k = 0; k < d; ++k) n2 += w[k] * w[k];
        if (n2 > 0.25) {
          n2 = std::sqrt(n2);
          for (int k = 0; k < d; ++k) vi[k] = w[k] / n2;
          found = true;
        }
      }
      if (!found) throw std::runtime_error("gram-schmidt: no fallback direction");
      norms[i] = 1.0;
    } else {
      fallback[i] = 0.0;
      norms[i] = n;
      for (int k = 0; k < d; ++k) vi[k] = w[k] / n;
    }
  }
  return fallbacks;
}

// Reverse-mode of gs_forward_row. vbar is consumed (mutated); ubar is
// accumulated into.
void gs_backward_row(const double* u, const double* v, const double* norms,
                     const double* coef, const double* fallback, double* vbar,
                     double* ubar, int m, int d) {
  std::vector<double> wbar(d);
  for (int i = m - 1; i >= 0; --i) {
    if (fallback[i] != 0.0) continue;  // constant column, no gradient
    const double* vi = v + i * d;
    const double* ui = u + i * d;
    double* vbi = vbar + i * d;
    // v_i = w_i / n_i with n_i = |w_i|:  wbar = (vbar - (vbar.v) v) / n
    double dot = 0.0;
    for (int k = 0; k < d; ++k) dot += vbi[k] * vi[k];
    for (int k = 0; k < d; ++k) wbar[k] = (vbi[k] - dot * vi[k]) / norms[i];
    // w_i = u_i - sum_j c_ij v_j,  c_ij = v_j . u_i
    for (int k = 0; k < d; ++k) ubar[i * d + k] += wbar[k];
    for (int j = 0; j < i; ++j) {
      const double* vj = v + j * d;
      double* vbj = vbar + j * d;
      const double c = coef[i * m + j];
      double cbar = 0.0;
      for (int k = 0; k < d; ++k) cbar -= wbar[k] * vj[k];
      for (int k = 0; k < d; ++k) {
        vbj[k] += -c * wbar[k] + cbar * ui[k];
        ubar[i * d + k] += cbar * vj[k];
      }
    }
  }
}

}  // namespace

Mat gram_schmidt_plain(const Mat& u_dxm, long* fallbacks) {
  const int d = u_dxm.rows;
  const int m = u_dxm.cols;
  if (m > d) throw std::invalid_argument("gram-schmidt needs d >= M");
  // Repack columns contiguously.
  std::vector<double> u(static_cast<size_t>(m) * d), v(static_cast<size_t>(m) * d);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < d; ++k) u[i * d + k] = u_dxm.at(k, i);
  }
  std::vector<double> norms(m), coef(static_cast<size_t>(m) * m), fb(m);
  const int n_fb = gs_forward_row(u.data(), v.data(), norms.data(), coef.data(),
                                  fb.data(), m, d);
  if (fallbacks) *fallbacks += n_fb;
  Mat out(d, m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < d; ++k) out.at(k, i) = v[i * d + k];
  }
  return out;
}

Var Graph::make(Mat value, std::vector<int> parents,
                std::function<void(Graph&, Node&)> bw) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward = std::move(bw);
  for (int p : n.parents) {
    if (nodes_[p].needs_grad) n.needs_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::input(Mat value) { return make(std::move(value), {}, nullptr); }

Var Graph::param(Param& p) {
  Node n;
  n.value = p.value;  // copy; updates apply between graphs
  n.needs_grad = true;
  n.bound = &p;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::matmul(Var a, Var w) {
  const Mat& A = nodes_[a.id].value;
  const Mat& W = nodes_[w.id].value;
  assert(A.cols == W.rows);
  Mat C(A.rows, W.cols);
  kernels::matmul(A.v.data(), W.v.data(), C.v.data(), A.rows, A.cols, W.cols);
  return make(std::move(C), {a.id, w.id}, [](Graph& g, Node& self) {
    Node& pa = g.nodes_[self.parents[0]];
    Node& pw = g.nodes_[self.parents[1]];
    const int B = pa.value.rows, K = pa.value.cols, N = pw.value.cols;
    if (pa.needs_grad) {
      kernels::matmul_bt_acc(self.grad.v.data(), pw.value.v.data(),
                             pa.grad.v.data(), B, K, N);
    }
    if (pw.needs_grad) {
      kernels::matmul_at_acc(pa.value.v.data(), self.grad.v.data(),
                             pw.grad.v.data(), B, K, N);
    }
  });
}

Var Graph::add_row(Var a, Var bias) {
  const Mat& A = nodes_[a.id].value;
  const Mat& R = nodes_[bias.id].value;
  assert(R.rows == 1 && R.cols == A.cols);
  Mat C = A;
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) C.at(i, j) += R.at(0, j);
  }
  return make(std::move(C), {a.id, bias.id}, [](Graph& g, Node& self) {
    Node& pa = g.nodes_[self.parents[0]];
    Node& pr = g.nodes_[self.parents[1]];
    if (pa.needs_grad) {
      for (size_t k = 0; k < self.grad.size(); ++k) pa.grad.v[k] += self.grad.v[k];
    }
    if (pr.needs_grad) {
      for (int i = 0; i < self.grad.rows; ++i) {
        for (int j = 0; j < self.grad.cols; ++j) pr.grad.at(0, j) += self.grad.at(i, j);
      }
    }
  });
}

Var Graph::mul_row(Var a, Var scale) {
  const Mat& A = nodes_[a.id].value;
  const Mat& R = nodes_[scale.id].value;
  assert(R.rows == 1 && R.cols == A.cols);
  Mat C = A;
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) C.at(i, j) *= R.at(0, j);
  }
  return make(std::move(C), {a.id, scale.id}, [](Graph& g, Node& self) {
    Node& pa = g.nodes_[self.parents[0]];
    Node& pr = g.nodes_[self.parents[1]];
    const Mat& A = pa.value;
    const Mat& R = pr.value;
    if (pa.needs_grad) {
      for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < A.cols; ++j) pa.grad.at(i, j) += self.grad.at(i, j) * R.at(0, j);
      }
    }
    if (pr.needs_grad) {
      for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < A.cols; ++j) pr.grad.at(0, j) += self.grad.at(i, j) * A.at(i, j);
      }
    }
  });
}

Var Graph::mul_col(Var a, Var scale) {
  const Mat& A = nodes_[a.id].value;
  const Mat& S = nodes_[scale.id].value;
  assert(S.cols == 1 && S.rows == A.rows);
  Mat C = A;
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) C.at(i, j) *= S.at(i, 0);
  }
  return make(std::move(C), {a.id, scale.id}, [](Graph& g, Node& self) {
    Node& pa = g.nodes_[self.parents[0]];
    Node& ps = g.nodes_[self.parents[1]];
    const Mat& A = pa.value;
    const Mat& S = ps.value;
    if (pa.needs_grad) {
      for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < A.cols; ++j) pa.grad.at(i, j) += self.grad.at(i, j) * S.at(i, 0);
      }
    }
    if (ps.needs_grad) {
      for (int i = 0; i < A.rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < A.cols; ++j) acc += self.grad.at(i, j) * A.at(i, j);
        ps.grad.at(i, 0) += acc;
      }
    }
  });
}

Var Graph::add(Var a, Var b) {
  const Mat& A = nodes_[a.id].value;
  const Mat& B = nodes_[b.id].value;
  assert(A.rows == B.rows && A.cols == B.cols);
  Mat C = A;
  for (size_t k = 0; k < C.size(); ++k) C.v[k] += B.v[k];
  return make(std::move(C), {a.id, b.id}, [](Graph& g, Node& self) {
    for (int pi = 0; pi < 2; ++pi) {
      Node& p = g.nodes_[self.parents[pi]];
      if (!p.needs_grad) continue;
      for (size_t k = 0; k < self.grad.size(); ++k) p.grad.v[k] += self.grad.v[k];
    }
  });
}

Var Graph::sub(Var a, Var b) {
  const Mat& A = nodes_[a.id].value;
  const Mat& B = nodes_[b.id].value;
  assert(A.rows == B.rows && A.cols == B.cols);
  Mat C = A;
  for (size_t k = 0; k < C.size(); ++k) C.v[k] -= B.v[k];
  return make(std::move(C), {a.id, b.id}, [](Graph& g, Node& self) {
    Node& pa = g.nodes_[self.parents[0]];
    Node& pb = g.nodes_[self.parents[1]];
    if (pa.needs_grad) {
      for (size_t k = 0; k < self.grad.size(); ++k) pa.grad.v[k] += self.grad.v[k];
    }
    if (pb.needs_grad) {
      for (size_t k = 0; k < self.grad.size(); ++k) pb.grad.v[k] -= self.grad.v[k];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  const Mat& A = nodes_[a.id].value;
  const Mat& B = nodes_[b.id].value;
  assert(A.rows == B.rows && A.cols == B.cols);
  Mat C = A;
  for (size_t k = 0; k < C.size(); ++k) C.v[k] *= B.v[k];
  return make(std::move(C), {a.id, b.id}, [](Graph& g, Node& self) {
    Node& pa = g.nodes_[self.parents[0]];
    Node& pb = g.nodes_[self.parents[1]];
    if (pa.needs_grad) {
      for (size_t k = 0; k < self.grad.size(); ++k) {
        pa.grad.v[k] += self.grad.v[k] * pb.value.v[k];
      }
    }
    if (pb.needs_grad) {
      for (size_t k = 0; k < self.grad.size(); ++k) {
        pb.grad.v[k] += self.grad.v[k] * pa.value.v[k];
      }
    }
  });
}

Var Graph::scale(Var a, double s) {
  Mat C = nodes_[a.id].value;
  for (double& x : C.v) x *= s;
  Var out = make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    for (size_t k = 0; k < self.grad.size(); ++k) {
      p.grad.v[k] += self.grad.v[k] * self.farg0;
    }
  });
  nodes_[out.id].farg0 = s;
  return out;
}

Var Graph::add_const(Var a, double c) {
  Mat C = nodes_[a.id].value;
  for (double& x : C.v) x += c;
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    for (size_t k = 0; k < self.grad.size(); ++k) p.grad.v[k] += self.grad.v[k];
  });
}

Var Graph::elu(Var a) {
  Mat C = nodes_[a.id].value;
  for (double& x : C.v) x = x > 0.0 ? x : std::expm1(x);
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    for (size_t k = 0; k < self.grad.size(); ++k) {
      const double y = self.value.v[k];
      p.grad.v[k] += self.grad.v[k] * (y > 0.0 ? 1.0 : y + 1.0);
    }
  });
}

Var Graph::exp_(Var a) {
  Mat C = nodes_[a.id].value;
  for (double& x : C.v) x = std::exp(x);
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    for (size_t k = 0; k < self.grad.size(); ++k) {
      p.grad.v[k] += self.grad.v[k] * self.value.v[k];
    }
  });
}

Var Graph::log_(Var a) {
  Mat C = nodes_[a.id].value;
  for (double& x : C.v) x = std::log(x);
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    for (size_t k = 0; k < self.grad.size(); ++k) {
      p.grad.v[k] += self.grad.v[k] / p.value.v[k];
    }
  });
}

Var Graph::square(Var a) {
  Mat C = nodes_[a.id].value;
  for (double& x : C.v) x = x * x;
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    for (size_t k = 0; k < self.grad.size(); ++k) {
      p.grad.v[k] += self.grad.v[k] * 2.0 * p.value.v[k];
    }
  });
}

Var Graph::sqrt_(Var a) {
  Mat C = nodes_[a.id].value;
  for (double& x : C.v) x = std::sqrt(x);
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    for (size_t k = 0; k < self.grad.size(); ++k) {
      p.grad.v[k] += self.grad.v[k] * 0.5 / self.value.v[k];
    }
  });
}

Var Graph::clamp(Var a, double lo, double hi) {
  Mat C = nodes_[a.id].value;
  for (double& x : C.v) x = std::clamp(x, lo, hi);
  Var out = make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    for (size_t k = 0; k < self.grad.size(); ++k) {
      const double x = p.value.v[k];
      if (x > self.farg0 && x < self.farg1) p.grad.v[k] += self.grad.v[k];
    }
  });
  nodes_[out.id].farg0 = lo;
  nodes_[out.id].farg1 = hi;
  return out;
}

Var Graph::minimum(Var a, Var b) {
  const Mat& A = nodes_[a.id].value;
  const Mat& B = nodes_[b.id].value;
  Mat C = A;
  for (size_t k = 0; k < C.size(); ++k) C.v[k] = std::min(A.v[k], B.v[k]);
  return make(std::move(C), {a.id, b.id}, [](Graph& g, Node& self) {
    Node& pa = g.nodes_[self.parents[0]];
    Node& pb = g.nodes_[self.parents[1]];
    for (size_t k = 0; k < self.grad.size(); ++k) {
      const bool take_a = pa.value.v[k] <= pb.value.v[k];
      if (take_a && pa.needs_grad) pa.grad.v[k] += self.grad.v[k];
      if (!take_a && pb.needs_grad) pb.grad.v[k] += self.grad.v[k];
    }
  });
}

Var Graph::maximum(Var a, Var b) {
  const Mat& A = nodes_[a.id].value;
  const Mat& B = nodes_[b.id].value;
  Mat C = A;
  for (size_t k = 0; k < C.size(); ++k) C.v[k] = std::max(A.v[k], B.v[k]);
  return make(std::move(C), {a.id, b.id}, [](Graph& g, Node& self) {
    Node& pa = g.nodes_[self.parents[0]];
    Node& pb = g.nodes_[self.parents[1]];
    for (size_t k = 0; k < self.grad.size(); ++k) {
      const bool take_a = pa.value.v[k] >= pb.value.v[k];
      if (take_a && pa.needs_grad) pa.grad.v[k] += self.grad.v[k];
      if (!take_a && pb.needs_grad) pb.grad.v[k] += self.grad.v[k];
    }
  });
}

Var Graph::softmax_rows(Var a) {
  Mat C = nodes_[a.id].value;
  for (int i = 0; i < C.rows; ++i) {
    double mx = C.at(i, 0);
    for (int j = 1; j < C.cols; ++j) mx = std::max(mx, C.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < C.cols; ++j) {
      C.at(i, j) = std::exp(C.at(i, j) - mx);
      sum += C.at(i, j);
    }
    for (int j = 0; j < C.cols; ++j) C.at(i, j) /= sum;
  }
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    const Mat& S = self.value;
    for (int i = 0; i < S.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < S.cols; ++j) dot += self.grad.at(i, j) * S.at(i, j);
      for (int j = 0; j < S.cols; ++j) {
        p.grad.at(i, j) += S.at(i, j) * (self.grad.at(i, j) - dot);
      }
    }
  });
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
  int rows = nodes_[parts[0].id].value.rows;
  int cols = 0;
  std::vector<int> ids;
  for (Var p : parts) {
    assert(nodes_[p.id].value.rows == rows);
    cols += nodes_[p.id].value.cols;
    ids.push_back(p.id);
  }
  Mat C(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Mat& A = nodes_[p.id].value;
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < A.cols; ++j) C.at(i, off + j) = A.at(i, j);
    }
    off += A.cols;
  }
  return make(std::move(C), std::move(ids), [](Graph& g, Node& self) {
    int off2 = 0;
    for (int pid : self.parents) {
      Node& p = g.nodes_[pid];
      if (p.needs_grad) {
        for (int i = 0; i < p.value.rows; ++i) {
          for (int j = 0; j < p.value.cols; ++j) {
            p.grad.at(i, j) += self.grad.at(i, off2 + j);
          }
        }
      }
      off2 += p.value.cols;
    }
  });
}

Var Graph::slice_cols(Var a, int lo, int hi) {
  const Mat& A = nodes_[a.id].value;
  assert(lo >= 0 && hi <= A.cols && lo < hi);
  Mat C(A.rows, hi - lo);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = lo; j < hi; ++j) C.at(i, j - lo) = A.at(i, j);
  }
  Var out = make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    const int lo2 = self.iargs[0];
    for (int i = 0; i < self.grad.rows; ++i) {
      for (int j = 0; j < self.grad.cols; ++j) {
        p.grad.at(i, lo2 + j) += self.grad.at(i, j);
      }
    }
  });
  nodes_[out.id].iargs = {lo};
  return out;
}

Var Graph::sum_rows(Var a) {
  const Mat& A = nodes_[a.id].value;
  Mat C(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) s += A.at(i, j);
    C.at(i, 0) = s;
  }
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    for (int i = 0; i < p.value.rows; ++i) {
      for (int j = 0; j < p.value.cols; ++j) p.grad.at(i, j) += self.grad.at(i, 0);
    }
  });
}

Var Graph::mean_all(Var a) {
  const Mat& A = nodes_[a.id].value;
  double s = 0.0;
  for (double x : A.v) s += x;
  Mat C(1, 1);
  C.at(0, 0) = s / static_cast<double>(A.size());
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    const double gs = self.grad.at(0, 0) / static_cast<double>(p.value.size());
    for (size_t k = 0; k < p.value.size(); ++k) p.grad.v[k] += gs;
  });
}

Var Graph::sum_all(Var a) {
  const Mat& A = nodes_[a.id].value;
  double s = 0.0;
  for (double x : A.v) s += x;
  Mat C(1, 1);
  C.at(0, 0) = s;
  return make(std::move(C), {a.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    const double gs = self.grad.at(0, 0);
    for (size_t k = 0; k < p.value.size(); ++k) p.grad.v[k] += gs;
  });
}

Var Graph::conv1d(Var x, Var w, Var bias, int T, int IC, int OC, int KS, int stride) {
  const Mat& X = nodes_[x.id].value;
  const Mat& W = nodes_[w.id].value;
  const Mat& Bv = nodes_[bias.id].value;
  assert(X.cols == T * IC);
  assert(W.rows == OC && W.cols == IC * KS);
  assert(Bv.rows == 1 && Bv.cols == OC);
  const int t_out = (T - KS) / stride + 1;
  Mat C(X.rows, t_out * OC);
  kernels::conv1d(X.v.data(), W.v.data(), Bv.v.data(), C.v.data(), X.rows, T, IC,
                  OC, KS, stride);
  Var out = make(std::move(C), {x.id, w.id, bias.id}, [](Graph& g, Node& self) {
    Node& px = g.nodes_[self.parents[0]];
    Node& pw = g.nodes_[self.parents[1]];
    Node& pb = g.nodes_[self.parents[2]];
    const int T2 = self.iargs[0], IC2 = self.iargs[1], OC2 = self.iargs[2];
    const int KS2 = self.iargs[3], S2 = self.iargs[4];
    kernels::conv1d_backward(px.value.v.data(), pw.value.v.data(),
                             self.grad.v.data(),
                             px.needs_grad ? px.grad.v.data() : nullptr,
                             pw.needs_grad ? pw.grad.v.data() : nullptr,
                             pb.needs_grad ? pb.grad.v.data() : nullptr,
                             px.value.rows, T2, IC2, OC2, KS2, S2);
  });
  nodes_[out.id].iargs = {T, IC, OC, KS, stride};
  return out;
}

Var Graph::gram_schmidt(Var u, int m, int d) {
  const Mat& U = nodes_[u.id].value;
  assert(U.cols == m * d);
  if (m > d) throw std::invalid_argument("gram-schmidt needs d >= M");
  const int B = U.rows;
  Mat V(B, m * d);
  std::vector<double> saved(static_cast<size_t>(B) * (m + m * m + m));
  long fallbacks = 0;
  for (int b = 0; b < B; ++b) {
    double* norms = saved.data() + static_cast<size_t>(b) * (m + m * m + m);
    double* coef = norms + m;
    double* fb = coef + m * m;
    fallbacks += gs_forward_row(U.v.data() + static_cast<size_t>(b) * m * d,
                                V.v.data() + static_cast<size_t>(b) * m * d,
                                norms, coef, fb, m, d);
  }
  gs_fallbacks_ += fallbacks;

#ifndef NDEBUG
  for (int b = 0; b < B; ++b) {
    const double* vr = V.v.data() + static_cast<size_t>(b) * m * d;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) {
        double dot = 0.0;
        for (int k = 0; k < d; ++k) dot += vr[i * d + k] * vr[j * d + k];
        assert(std::fabs(dot - (i == j ? 1.0 : 0.0)) < 1e-6);
      }
    }
  }
#else
  if (B > 0) {  // sampled check in release builds
    const double* vr = V.v.data();
    for (int i = 0; i < m; ++i) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += vr[i * d + k] * vr[i * d + k];
      if (std::fabs(dot - 1.0) > 1e-5) {
        throw std::runtime_error("gram-schmidt orthonormality violated");
      }
    }
  }
#endif

  Var out = make(std::move(V), {u.id}, [](Graph& g, Node& self) {
    Node& p = g.nodes_[self.parents[0]];
    if (!p.needs_grad) return;
    const int m2 = self.iargs[0], d2 = self.iargs[1];
    const int B2 = self.value.rows;
    std::vector<double> vbar(static_cast<size_t>(m2) * d2);
    for (int b = 0; b < B2; ++b) {
      const size_t row = static_cast<size_t>(b) * m2 * d2;
      const double* norms = self.saved.data() + static_cast<size_t>(b) * (m2 + m2 * m2 + m2);
      const double* coef = norms + m2;
      const double* fb = coef + m2 * m2;
      std::copy(self.grad.v.begin() + row, self.grad.v.begin() + row + m2 * d2,
                vbar.begin());
      gs_backward_row(p.value.v.data() + row, self.value.v.data() + row, norms,
                      coef, fb, vbar.data(), p.grad.v.data() + row, m2, d2);
    }
  });
  nodes_[out.id].iargs = {m, d};
  nodes_[out.id].saved = std::move(saved);
  return out;
}

void Graph::backward(Var loss) {
  Node& ln = nodes_[loss.id];
  if (ln.value.rows != 1 || ln.value.cols != 1) {
    throw std::invalid_argument("backward: loss must be 1x1");
  }
  for (Node& n : nodes_) {
    if (n.needs_grad) n.grad = Mat(n.value.rows, n.value.cols);
  }
  if (!ln.needs_grad) return;  // no parameters involved
  ln.grad.at(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad) continue;
    if (n.backward) n.backward(*this, n);
    if (n.bound) {
      for (size_t k = 0; k < n.grad.size(); ++k) n.bound->grad.v[k] += n.grad.v[k];
    }
  }
}

}  // namespace tracklab
