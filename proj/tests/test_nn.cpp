#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>

#include "tracklab/nn/adam.hpp"
#include "tracklab/nn/checkpoint.hpp"
#include "tracklab/nn/history_encoder.hpp"
#include "tracklab/nn/kernels.hpp"
#include "tracklab/nn/policy.hpp"

using namespace tracklab;

namespace {

// Central finite-difference check of d(loss)/d(param) for every entry of
// every listed parameter. `loss` must rebuild the graph from current values.
double max_fd_rel_error(const std::function<double()>& loss,
                        const std::function<void()>& backward_into_grads,
                        std::vector<Param*> params, double h = 1e-5) {
  for (Param* p : params) p->zero_grad();
  backward_into_grads();
  double worst = 0.0;
  for (Param* p : params) {
    for (size_t k = 0; k < p->value.size(); ++k) {
      const double orig = p->value.v[k];
      p->value.v[k] = orig + h;
      const double up = loss();
      p->value.v[k] = orig - h;
      const double down = loss();
      p->value.v[k] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double an = p->grad.v[k];
      const double rel = std::fabs(an - fd) / std::max({1e-6, std::fabs(an), std::fabs(fd)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

Mat random_mat(int r, int c, Rng& rng, double s = 1.0) {
  Mat m(r, c);
  for (double& v : m.v) v = rng.gaussian(0.0, s);
  return m;
}

}  // namespace

TEST_CASE("gram-schmidt plane example and fixed point") {
  // U columns (1,0) and (1,1) -> V columns (1,0), (0,1).
  Mat u(2, 2);
  u.at(0, 0) = 1;
  u.at(1, 0) = 0;
  u.at(0, 1) = 1;
  u.at(1, 1) = 1;
  const Mat v = gram_schmidt_plain(u);
  CHECK(v.at(0, 0) == doctest::Approx(1.0));
  CHECK(v.at(1, 0) == doctest::Approx(0.0));
  CHECK(v.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.at(1, 1) == doctest::Approx(1.0));

  // Already orthonormal input is a fixed point (exactly, up to normalization).
  Rng rng(5);
  Mat q = gram_schmidt_plain(random_mat(16, 4, rng));
  const Mat q2 = gram_schmidt_plain(q);
  for (size_t k = 0; k < q.size(); ++k) CHECK(q2.v[k] == doctest::Approx(q.v[k]).epsilon(1e-12));
}

TEST_CASE("gram-schmidt orthonormality on random inputs") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat u = random_mat(64, 4, rng);
    const Mat v = gram_schmidt_plain(u);
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 64; ++k) dot += v.at(k, i) * v.at(k, j);
        worst = std::max(worst, std::fabs(dot - (i == j ? 1.0 : 0.0)));
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("gram-schmidt scale invariance of normalized columns") {
  Rng rng(11);
  const int d = 32, m = 4;
  Mat u = random_mat(d, m, rng);
  const Mat v1 = gram_schmidt_plain(u);
  Mat u2 = u;
  for (int k = 0; k < d; ++k) u2.at(k, 2) *= 10.0;  // scale expert 2 by c > 0
  const Mat v2 = gram_schmidt_plain(u2);
  for (size_t k = 0; k < v1.size(); ++k) {
    CHECK(std::fabs(v1.v[k] - v2.v[k]) < 1e-9);
  }
}

TEST_CASE("gram-schmidt degenerate pivot falls back and stays orthonormal") {
  Rng rng(13);
  Mat u = random_mat(8, 3, rng);
  for (int k = 0; k < 8; ++k) u.at(k, 1) = 2.0 * u.at(k, 0);  // dependent column
  long fallbacks = 0;
  const Mat v = gram_schmidt_plain(u, &fallbacks);
  CHECK(fallbacks == 1);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 8; ++k) dot += v.at(k, i) * v.at(k, j);
      CHECK(std::fabs(dot - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
  }
}

TEST_CASE("gram-schmidt graph gradients match finite differences") {
  Rng rng(17);
  const int m = 3, d = 8, B = 2;
  Param u("u", random_mat(B, m * d, rng));
  const Mat w = random_mat(B, m * d, rng);  // random projection weights

  auto build = [&](bool bw) {
    Graph g;
    Var uv = g.param(u);
    Var v = g.gram_schmidt(uv, m, d);
    Var loss = g.mean_all(g.mul(v, g.input(w)));
    if (bw) g.backward(loss);
    return g.value(loss).at(0, 0);
  };
  const double worst = max_fd_rel_error([&] { return build(false); },
                                        [&] { build(true); }, {&u});
  CHECK(worst < 1e-4);
}

TEST_CASE("router weights: softmax identities") {
  Rng rng(23);
  PolicyConfig cfg;
  cfg.obs_dim = 12;
  cfg.experts = 4;
  cfg.feature_dim = 8;
  cfg.expert_hidden = {16};
  cfg.router_hidden = {8};
  cfg.head_hidden = {8};
  cfg.value_hidden = {8};
  OmoePolicy policy(cfg, 1);

  const Mat obs = random_mat(5, cfg.obs_dim, rng);
  auto r = policy.act(obs, true);
  REQUIRE(r.alpha.rows == 5);
  REQUIRE(r.alpha.cols == 4);
  for (int i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
      CHECK(r.alpha.at(i, j) > 0.0);
      sum += r.alpha.at(i, j);
    }
    CHECK(std::fabs(sum - 1.0) < 1e-12);
  }

  // Direct softmax arithmetic: logits (ln 2, 0) -> (2/3, 1/3).
  Graph g;
  Mat logits(1, 2);
  logits.at(0, 0) = std::log(2.0);
  Var s = g.softmax_rows(g.input(logits));
  CHECK(g.value(s).at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(g.value(s).at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // Equal logits -> 1/M.
  Graph g2;
  Var s2 = g2.softmax_rows(g2.input(Mat(1, 4)));
  for (int j = 0; j < 4; ++j) CHECK(g2.value(s2).at(0, j) == doctest::Approx(0.25));
}

TEST_CASE("single-expert policy equals the plain normalized pipeline") {
  Rng rng(29);
  PolicyConfig cfg;
  cfg.obs_dim = 6;
  cfg.experts = 1;
  cfg.feature_dim = 5;
  cfg.expert_hidden = {7};
  cfg.router_hidden = {4};
  cfg.head_hidden = {6};
  cfg.value_hidden = {6};
  OmoePolicy policy(cfg, 3);

  const Mat obs = random_mat(4, cfg.obs_dim, rng);
  auto r = policy.act(obs, true);
  for (int i = 0; i < 4; ++i) CHECK(r.alpha.at(i, 0) == doctest::Approx(1.0).epsilon(1e-12));

  // Reference pipeline with the same weights: expert stack, row
  // normalization, head stack — built directly from the parameter blobs.
  auto params = policy.params();
  auto find = [&](const std::string& name) -> const Mat& {
    for (Param* p : params) {
      if (p->name == name) return p->value;
    }
    throw std::runtime_error("missing param " + name);
  };
  auto dense = [](const Mat& x, const Mat& w, const Mat& b, bool act) {
    Mat out(x.rows, w.cols);
    for (int i = 0; i < x.rows; ++i) {
      for (int j = 0; j < w.cols; ++j) {
        double acc = b.at(0, j);
        for (int k = 0; k < w.rows; ++k) acc += x.at(i, k) * w.at(k, j);
        out.at(i, j) = act && acc <= 0.0 ? std::expm1(acc) : acc;
      }
    }
    return out;
  };
  Mat f = dense(obs, find("expert0.w0"), find("expert0.b0"), true);
  f = dense(f, find("expert0.w1"), find("expert0.b1"), false);
  for (int i = 0; i < f.rows; ++i) {
    double n = 0.0;
    for (int j = 0; j < f.cols; ++j) n += f.at(i, j) * f.at(i, j);
    n = std::sqrt(n);
    for (int j = 0; j < f.cols; ++j) f.at(i, j) /= n;
  }
  Mat mean = dense(f, find("head.w0"), find("head.b0"), true);
  mean = dense(mean, find("head.w1"), find("head.b1"), false);
  for (size_t k = 0; k < mean.size(); ++k) {
    CHECK(r.mean.v[k] == doctest::Approx(mean.v[k]).epsilon(1e-12));
  }

  // Features are unit rows.
  for (int i = 0; i < 4; ++i) {
    double n = 0.0;
    for (int k = 0; k < cfg.feature_dim; ++k) n += r.features.at(i, k) * r.features.at(i, k);
    CHECK(std::fabs(n - 1.0) < 1e-9);
  }
}

TEST_CASE("scaling one expert's output leaves the omoe action unchanged") {
  Rng rng(31);
  PolicyConfig cfg;
  cfg.obs_dim = 9;
  cfg.experts = 3;
  cfg.feature_dim = 6;
  cfg.expert_hidden = {10};
  cfg.router_hidden = {6};
  cfg.head_hidden = {6};
  cfg.value_hidden = {6};
  OmoePolicy policy(cfg, 9);
  const Mat obs = random_mat(3, cfg.obs_dim, rng);
  const auto before = policy.act(obs);

  // Scale expert 1's output layer (weights and bias) by 10.
  auto params = policy.params();
  for (Param* p : params) {
    if (p->name == "expert1.w1" || p->name == "expert1.b1") {
      for (double& v : p->value.v) v *= 10.0;
    }
  }
  const auto after = policy.act(obs);
  for (size_t k = 0; k < before.mean.size(); ++k) {
    CHECK(std::fabs(before.mean.v[k] - after.mean.v[k]) < 1e-9);
  }
}

TEST_CASE("full omoe forward gradients match finite differences (toy)") {
  Rng rng(37);
  PolicyConfig cfg;
  cfg.obs_dim = 5;
  cfg.experts = 2;
  cfg.feature_dim = 4;
  cfg.expert_hidden = {6};
  cfg.router_hidden = {4};
  cfg.head_hidden = {5};
  cfg.value_hidden = {4};
  cfg.action_dim = 3;
  OmoePolicy policy(cfg, 7);

  const Mat obs = random_mat(3, cfg.obs_dim, rng);
  const Mat actions = random_mat(3, cfg.action_dim, rng, 0.3);
  const Mat adv = random_mat(3, 1, rng);

  auto build = [&](bool bw) {
    Graph g;
    Var x = g.input(obs);
    PolicyForward f = policy.forward(g, x);
    Var lp = gaussian_log_prob_graph(g, f.mean, g.param(policy.log_std()), g.input(actions));
    Var loss = g.mean_all(g.add(g.mul(lp, g.input(adv)), g.square(f.value)));
    if (bw) g.backward(loss);
    return g.value(loss).at(0, 0);
  };
  const double worst = max_fd_rel_error([&] { return build(false); },
                                        [&] { build(true); }, policy.params());
  CHECK(worst < 1e-4);
}

TEST_CASE("dense, elu, softmax, conv gradient checks") {
  Rng rng(41);

  SUBCASE("dense + elu stack") {
    Mlp net("t", 4, {6, 5}, 2, rng);
    const Mat x = random_mat(3, 4, rng);
    const Mat tgt = random_mat(3, 2, rng);
    auto build = [&](bool bw) {
      Graph g;
      Var out = net.forward(g, g.input(x));
      Var loss = g.mean_all(g.square(g.sub(out, g.input(tgt))));
      if (bw) g.backward(loss);
      return g.value(loss).at(0, 0);
    };
    CHECK(max_fd_rel_error([&] { return build(false); }, [&] { build(true); },
                           net.params()) < 1e-4);
  }

  SUBCASE("softmax through a weighted loss") {
    Param logits("l", random_mat(4, 3, rng));
    const Mat w = random_mat(4, 3, rng);
    auto build = [&](bool bw) {
      Graph g;
      Var s = g.softmax_rows(g.param(logits));
      Var loss = g.mean_all(g.mul(s, g.input(w)));
      if (bw) g.backward(loss);
      return g.value(loss).at(0, 0);
    };
    CHECK(max_fd_rel_error([&] { return build(false); }, [&] { build(true); },
                           {&logits}) < 1e-4);
  }

  SUBCASE("conv1d") {
    const int T = 6, IC = 3, OC = 4, KS = 3, S = 1;
    Param w("w", random_mat(OC, IC * KS, rng, 0.5));
    Param b("b", random_mat(1, OC, rng, 0.1));
    Param x("x", random_mat(2, T * IC, rng));
    const int t_out = (T - KS) / S + 1;
    const Mat target = random_mat(2, t_out * OC, rng);
    auto build = [&](bool bw) {
      Graph g;
      Var out = g.conv1d(g.param(x), g.param(w), g.param(b), T, IC, OC, KS, S);
      Var loss = g.mean_all(g.square(g.sub(out, g.input(target))));
      if (bw) g.backward(loss);
      return g.value(loss).at(0, 0);
    };
    CHECK(max_fd_rel_error([&] { return build(false); }, [&] { build(true); },
                           {&x, &w, &b}) < 1e-4);
  }

  SUBCASE("gaussian log-prob wrt mean and log-std") {
    Param mean("m", random_mat(5, 3, rng));
    Param ls("ls", random_mat(1, 3, rng, 0.3));
    const Mat actions = random_mat(5, 3, rng);
    auto build = [&](bool bw) {
      Graph g;
      Var lp = gaussian_log_prob_graph(g, g.param(mean), g.param(ls), g.input(actions));
      Var loss = g.mean_all(lp);
      if (bw) g.backward(loss);
      return g.value(loss).at(0, 0);
    };
    CHECK(max_fd_rel_error([&] { return build(false); }, [&] { build(true); },
                           {&mean, &ls}) < 1e-4);
  }
}

TEST_CASE("sample_action statistics and density") {
  Rng rng(43);
  const int dim = 10;
  std::vector<double> mean(dim, 0.3);
  std::vector<double> log_std(dim, std::log(0.5));

  // Exact density at the mean.
  const double lp = gaussian_log_prob(mean.data(), log_std.data(), mean.data(), dim);
  const double expect = -dim * std::log(0.5) - 0.5 * dim * 1.8378770664093453 -
                        dim * std::log(1.0) * 0;
  CHECK(lp == doctest::Approx(-std::log(0.5) * dim - 5.0 * 1.8378770664093453).epsilon(1e-12));
  (void)expect;

  // Empirical std within 2%.
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto s = sample_action(mean.data(), log_std.data(), dim, rng);
    sum += s.action[0];
    sum2 += s.action[0] * s.action[0];
  }
  const double var = sum2 / n - (sum / n) * (sum / n);
  CHECK(std::sqrt(var) == doctest::Approx(0.5).epsilon(0.02));

  // Vanishing noise at the clamp floor: sigma = e^-5, stay within 6 sigma.
  std::vector<double> tiny(dim, -20.0);  // clamps to -5
  for (int i = 0; i < 100; ++i) {
    const auto s = sample_action(mean.data(), tiny.data(), dim, rng);
    for (int j = 0; j < dim; ++j) {
      CHECK(std::fabs(s.action[j] - mean[j]) < 6.0 * std::exp(-5.0));
    }
  }
}

TEST_CASE("history encoder basics") {
  EncoderConfig cfg;
  cfg.history_len = 10;
  cfg.in_channels = 33;
  HistoryEncoder enc(cfg, 5);

  // Zero history -> finite outputs.
  Mat zeros(2, cfg.history_len * cfg.in_channels);
  auto r = enc.encode(zeros);
  REQUIRE(r.latent.cols == cfg.latent_dim);
  REQUIRE(r.prediction.cols == cfg.privileged_dim);
  for (double v : r.latent.v) CHECK(std::isfinite(v));

  // Permuting the batch permutes outputs identically.
  Rng rng(3);
  Mat batch = random_mat(4, cfg.history_len * cfg.in_channels, rng);
  auto full = enc.encode(batch);
  Mat swapped = batch;
  for (int j = 0; j < batch.cols; ++j) {
    std::swap(swapped.at(0, j), swapped.at(3, j));
  }
  auto sw = enc.encode(swapped);
  for (int j = 0; j < cfg.latent_dim; ++j) {
    CHECK(sw.latent.at(0, j) == full.latent.at(3, j));
    CHECK(sw.latent.at(3, j) == full.latent.at(0, j));
    CHECK(sw.latent.at(1, j) == full.latent.at(1, j));
  }

  // Wrong history length throws.
  Mat bad(1, cfg.history_len * cfg.in_channels + 1);
  Graph g;
  CHECK_THROWS(enc.encode(bad));
}

TEST_CASE("encoder gradient check") {
  Rng rng(47);
  EncoderConfig cfg;
  cfg.history_len = 6;
  cfg.in_channels = 4;
  cfg.conv_channels = 5;
  cfg.latent_dim = 3;
  cfg.privileged_dim = 2;
  HistoryEncoder enc(cfg, 11);
  const Mat x = random_mat(3, cfg.history_len * cfg.in_channels, rng);
  const Mat target = random_mat(3, cfg.privileged_dim, rng);
  auto build = [&](bool bw) {
    Graph g;
    EncoderForward f = enc.forward(g, g.input(x));
    Var loss = g.mean_all(g.square(g.sub(f.prediction, g.input(target))));
    if (bw) g.backward(loss);
    return g.value(loss).at(0, 0);
  };
  CHECK(max_fd_rel_error([&] { return build(false); }, [&] { build(true); },
                         enc.params()) < 1e-4);
}

TEST_CASE("checkpoint round trip, truncation, and arch mismatch") {
  Rng rng(53);
  PolicyConfig cfg;
  cfg.obs_dim = 8;
  cfg.experts = 2;
  cfg.feature_dim = 4;
  cfg.expert_hidden = {6};
  cfg.router_hidden = {4};
  cfg.head_hidden = {4};
  cfg.value_hidden = {4};
  OmoePolicy a(cfg, 1);
  OmoePolicy b(cfg, 2);

  const auto tmp = std::filesystem::temp_directory_path();
  const std::string path = (tmp / "ckpt_test.bin").string();
  save_weights(a.params(), a.config().describe(), path);
  load_weights(b.params(), b.config().describe(), path);

  auto pa = a.params();
  auto pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    for (size_t k = 0; k < pa[i]->value.size(); ++k) {
      CHECK(pa[i]->value.v[k] == pb[i]->value.v[k]);
    }
  }

  // Architecture mismatch rejected.
  PolicyConfig cfg2 = cfg;
  cfg2.experts = 1;
  OmoePolicy c(cfg2, 3);
  CHECK_THROWS_WITH_AS(load_weights(c.params(), c.config().describe(), path),
                       doctest::Contains("architecture mismatch"), std::runtime_error);

  // Truncated file: clean error and no partial load.
  std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
  OmoePolicy d(cfg, 4);
  const double before = d.params()[0]->value.v[0];
  CHECK_THROWS_AS(load_weights(d.params(), d.config().describe(), path), std::runtime_error);
  CHECK(d.params()[0]->value.v[0] == before);
  std::remove(path.c_str());
}

TEST_CASE("adam minimizes a quadratic") {
  Param p("p", Mat(1, 4));
  for (int i = 0; i < 4; ++i) p.value.at(0, i) = 2.0 + i;
  Adam opt({&p}, 0.05);
  for (int it = 0; it < 800; ++it) {
    opt.zero_grad();
    Graph g;
    Var loss = g.mean_all(g.square(g.param(p)));
    g.backward(loss);
    opt.step(0.0);
  }
  for (int i = 0; i < 4; ++i) CHECK(std::fabs(p.value.at(0, i)) < 1e-2);
}

TEST_CASE("omp kernels match the serial reference bit-exact") {
  Rng rng(59);
  const int B = 17, K = 23, N = 13;
  const Mat A = random_mat(B, K, rng);
  const Mat W = random_mat(K, N, rng);
  Mat c1(B, N), c2(B, N);
  kernels::matmul(A.v.data(), W.v.data(), c1.v.data(), B, K, N);
  kernels_serial::matmul(A.v.data(), W.v.data(), c2.v.data(), B, K, N);
  for (size_t k = 0; k < c1.size(); ++k) CHECK(c1.v[k] == c2.v[k]);

  Mat g1(B, K), g2(B, K);
  kernels::matmul_bt_acc(c1.v.data(), W.v.data(), g1.v.data(), B, K, N);
  kernels_serial::matmul_bt_acc(c1.v.data(), W.v.data(), g2.v.data(), B, K, N);
  for (size_t k = 0; k < g1.size(); ++k) CHECK(g1.v[k] == g2.v[k]);

  Mat w1(K, N), w2(K, N);
  kernels::matmul_at_acc(A.v.data(), c1.v.data(), w1.v.data(), B, K, N);
  kernels_serial::matmul_at_acc(A.v.data(), c1.v.data(), w2.v.data(), B, K, N);
  for (size_t k = 0; k < w1.size(); ++k) CHECK(w1.v[k] == w2.v[k]);

  const int T = 9, IC = 5, OC = 7, KS = 3, S = 2;
  const Mat X = random_mat(B, T * IC, rng);
  const Mat Wc = random_mat(OC, IC * KS, rng);
  const Mat bias = random_mat(1, OC, rng);
  const int t_out = (T - KS) / S + 1;
  Mat o1(B, t_out * OC), o2(B, t_out * OC);
  kernels::conv1d(X.v.data(), Wc.v.data(), bias.v.data(), o1.v.data(), B, T, IC, OC, KS, S);
  kernels_serial::conv1d(X.v.data(), Wc.v.data(), bias.v.data(), o2.v.data(), B, T, IC, OC, KS, S);
  for (size_t k = 0; k < o1.size(); ++k) CHECK(o1.v[k] == o2.v[k]);
}

TEST_CASE("f32 inference stays close to f64") {
  Rng rng(61);
  Mlp net("t", 8, {16, 16}, 4, rng);
  std::vector<float> x32(8);
  Mat x64(1, 8);
  for (int i = 0; i < 8; ++i) {
    x64.at(0, i) = rng.uniform(-1, 1);
    x32[i] = static_cast<float>(x64.at(0, i));
  }
  Graph g;
  Var out = net.forward(g, g.input(x64));
  const auto y32 = net.forward_f32(x32);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::fabs(y32[i] - g.value(out).at(0, i)) < 1e-4);
  }
}
