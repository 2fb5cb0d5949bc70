#pragma once

#include <cassert>
#include <functional>
#include <string>
#include <vector>

#include "tracklab/core/rng.hpp"

namespace tracklab {

// Row-major dense matrix of 64-bit floats.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }

  static Mat zeros(int r, int c) { return Mat(r, c); }
  static Mat randn(int r, int c, double stddev, Rng& rng) {
    Mat m(r, c);
    for (double& x : m.v) x = rng.gaussian(0.0, stddev);
    return m;
  }
};

// Trainable parameter: value plus accumulated gradient.
struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param() = default;
  Param(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
    grad = Mat(value.rows, value.cols);
  }
  void zero_grad() { grad.zero(); }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Dynamic reverse-mode tape over matrix ops. Build a fresh Graph per forward
// pass; backward() walks the tape in reverse creation order. Forward work
// runs on the OpenMP kernels; every reduction has a fixed accumulation
// order, so results do not depend on the thread count.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var input(Mat value);               // constant; no gradient tracked
  Var param(Param& p);                // leaf bound to external storage

  Var matmul(Var a, Var w);
  Var add_row(Var a, Var bias);       // (B,C) + (1,C) broadcast
  Var mul_row(Var a, Var scale);      // (B,C) * (1,C) broadcast
  Var mul_col(Var a, Var scale);      // (B,C) * (B,1) broadcast
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);              // elementwise, same shape
  Var scale(Var a, double s);
  Var add_const(Var a, double c);
  Var elu(Var a);
  Var exp_(Var a);
  Var log_(Var a);
  Var square(Var a);
  Var sqrt_(Var a);
  Var clamp(Var a, double lo, double hi);  // pass-through gradient inside range
  Var minimum(Var a, Var b);
  Var maximum(Var a, Var b);
  Var softmax_rows(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int lo, int hi);
  Var sum_rows(Var a);                // (B,C) -> (B,1)
  Var mean_all(Var a);                // -> (1,1)
  Var sum_all(Var a);                 // -> (1,1)
  Var conv1d(Var x, Var w, Var bias, int T, int IC, int OC, int KS, int stride);

  // Orthogonalizes M blocks of d columns per row (each row holds M feature
  // vectors laid out contiguously). Columns are normalized after projection;
  // a pivot below 1e-8 is replaced by a fixed fallback direction and counted
  // in gs_fallbacks().
  Var gram_schmidt(Var u, int m, int d);

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }

  // Seeds d(loss)/d(loss) = 1 and accumulates into every Param bound via
  // param(). loss must be 1x1.
  void backward(Var loss);

  long gs_fallbacks() const { return gs_fallbacks_; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    Param* bound = nullptr;
    std::function<void(Graph&, Node&)> backward;
    // Scratch for ops that need saved intermediates.
    std::vector<double> saved;
    std::vector<int> parents;
    std::vector<int> iargs;
    double farg0 = 0.0, farg1 = 0.0;
  };

  Var make(Mat value, std::vector<int> parents,
           std::function<void(Graph&, Node&)> bw);
  Node& node(Var v) { return nodes_[v.id]; }

  std::vector<Node> nodes_;
  long gs_fallbacks_ = 0;
};

// Plain single-instance Gram-Schmidt on a d x M matrix (columns = feature
// vectors), matching the graph op; exposed for direct use and for the
// acceptance oracle.
Mat gram_schmidt_plain(const Mat& u_dxm, long* fallbacks = nullptr);

}  // namespace tracklab
