#include "optlab/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "optlab/error.hpp"
#include "optlab/numerics/linalg.hpp"

namespace optlab::reference {

namespace {

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

Mat zeros(std::size_t r, std::size_t c) { return Mat(r, Vec(c, 0.0)); }

Mat eye(std::size_t n) {
  Mat m = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

double frob(const Mat& a) {
  double s = 0;
  for (const auto& row : a)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

}  // namespace

Mat to_mat(const Vec& flat, std::size_t rows, std::size_t cols) {
  Mat m = zeros(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = flat[i * cols + j];
  return m;
}

Vec to_flat(const Mat& m) {
  Vec out;
  for (const auto& row : m) out.insert(out.end(), row.begin(), row.end());
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Mat c = zeros(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (std::size_t l = 0; l < k; ++l) s += a[i][l] * b[l][j];
      c[i][j] = s;
    }
  return c;
}

Mat transpose(const Mat& a) {
  if (a.empty()) return {};
  Mat t = zeros(a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

Mat newton_schulz(const Mat& g, int iters, double a, double b, double c) {
  const bool tall = g.size() > g[0].size();
  Mat x = tall ? transpose(g) : g;
  const double norm = frob(g);
  for (auto& row : x)
    for (double& v : row) v /= norm;
  for (int it = 0; it < iters; ++it) {
    const Mat A = matmul(x, transpose(x));
    const Mat Ax = matmul(A, x);
    const Mat AAx = matmul(A, Ax);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x[0].size(); ++j) x[i][j] = a * x[i][j] + b * Ax[i][j] + c * AAx[i][j];
  }
  return tall ? transpose(x) : x;
}

Mat jacobi_eigenvectors(const Mat& sym) {
  const std::size_t n = sym.size();
  Mat a = sym;
  Mat v = eye(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-300) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = sgn(theta == 0.0 ? 1.0 : theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  Mat out = zeros(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v[i][order[k]]) > std::abs(v[arg][order[k]])) arg = i;
    const double flip = v[arg][order[k]] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out[i][k] = flip * v[i][order[k]];
  }
  return out;
}

Mat gram_schmidt_q(const Mat& a) {
  const std::size_t n = a.size(), m = a[0].size();
  Mat q = zeros(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    Vec col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = a[i][j];
    for (int pass = 0; pass < 2; ++pass) {
      Vec proj(j, 0.0);
      for (std::size_t k = 0; k < j; ++k)
        for (std::size_t i = 0; i < n; ++i) proj[k] += q[i][k] * col[i];
      for (std::size_t k = 0; k < j; ++k)
        for (std::size_t i = 0; i < n; ++i) col[i] -= proj[k] * q[i][k];
    }
    double norm = 0;
    for (double x : col) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0)) throw DegenerateInput("reference qr: rank deficient");
    for (std::size_t i = 0; i < n; ++i) q[i][j] = col[i] / norm;
  }
  return q;
}

Optimizer::Optimizer(OptimizerConfig config, const std::vector<ParamBlock>& blocks, Linalg linalg)
    : config_(config), linalg_(linalg), slots_(blocks.size()), d_(config.d0) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Slot& s = slots_[i];
    const std::size_t n = blocks[i].size();
    s.m.assign(n, 0.0);
    s.m2.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.h.assign(n, 0.0);
    s.g_prev.assign(n, 0.0);
    s.z = blocks[i].values;   // sf: z0 = x0; prodigy: x0 snapshot
    s.xa = blocks[i].values;
  }
}

void Optimizer::initial_gradient(const Gradients& g) {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    for (std::size_t k = 0; k < g[i].size(); ++k) slots_[i].v[k] = g[i][k] * g[i][k];
  }
  adopt_ready_ = true;
}

BlockValues Optimizer::gradient_point(const std::vector<ParamBlock>& blocks) {
  BlockValues out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (config_.kind != OptimizerKind::sfadamw) {
      out.push_back(blocks[i].values);
      continue;
    }
    Slot& s = slots_[i];
    s.y.resize(s.z.size());
    for (std::size_t k = 0; k < s.z.size(); ++k) s.y[k] = (1 - config_.beta1) * s.z[k] + config_.beta1 * s.xa[k];
    out.push_back(s.y);
  }
  return out;
}

bool Optimizer::needs_curvature() const {
  if (config_.kind != OptimizerKind::sophia) return false;
  return sophia_t_ % config_.estimator_freq == 0;  // next step index t+1 is 1 mod k
}

void Optimizer::adam(ParamBlock& p, const Vec& g, Slot& s, double lr, double wd, double b1, double b2) {
  s.t += 1;
  const double c1 = 1 - std::pow(b1, double(s.t));
  const double c2 = 1 - std::pow(b2, double(s.t));
  for (std::size_t k = 0; k < g.size(); ++k) {
    s.m[k] = b1 * s.m[k] + (1 - b1) * g[k];
    s.v[k] = b2 * s.v[k] + (1 - b2) * g[k] * g[k];
    p.values[k] -= lr * ((s.m[k] / c1) / (std::sqrt(s.v[k] / c2) + config_.epsilon) + wd * p.values[k]);
  }
}

void Optimizer::step(std::vector<ParamBlock>& blocks, const Gradients& g, double lr, double lr_factor,
                     const Gradients* curvature, std::size_t batch_size, std::int64_t total_steps) {
  if (config_.kind == OptimizerKind::prodigy) {
    prodigy(blocks, g, lr);
    return;
  }
  const bool refresh = needs_curvature();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    step_one(i, blocks[i], g[i], lr, config_.matrix_lr * lr_factor, refresh ? curvature : nullptr, batch_size,
             total_steps);
  }
  if (config_.kind == OptimizerKind::sophia) ++sophia_t_;
}

void Optimizer::step_one(std::size_t i, ParamBlock& p, const Vec& g, double lr, double mlr,
                         const Gradients* curvature, std::size_t batch_size, std::int64_t total_steps) {
  const OptimizerConfig& c = config_;
  Slot& s = slots_[i];
  Vec& x = p.values;
  const std::size_t n = x.size();
  const double b1 = c.beta1, b2 = c.beta2, eps = c.epsilon, wd = c.weight_decay;
  const bool matrix = p.role == Role::matrix;

  switch (c.kind) {
    case OptimizerKind::adamw:
      adam(p, g, s, lr, wd, b1, b2);
      return;

    case OptimizerKind::adopt: {
      s.t += 1;
      const double cap = std::pow(double(s.t), 0.25);
      for (std::size_t k = 0; k < n; ++k) {
        double u = g[k] / std::max(std::sqrt(s.v[k]), eps);
        u = std::min(std::max(u, -cap), cap);
        s.m[k] = b1 * s.m[k] + (1 - b1) * u;
        x[k] -= lr * (s.m[k] + wd * x[k]);
        s.v[k] = b2 * s.v[k] + (1 - b2) * g[k] * g[k];
      }
      return;
    }

    case OptimizerKind::ademamix: {
      s.t += 1;
      const double T = double(c.ema_horizon > 0 ? c.ema_horizon : std::max<std::int64_t>(total_steps, 1));
      const double t = double(s.t);
      const double alpha = std::min(t * c.alpha / T, c.alpha);
      const double lb = std::log(c.beta_start), l3 = std::log(c.beta3);
      const double mix = std::min(t / T, 1.0);
      const double b3 = std::min(std::exp(lb * l3 / ((1 - mix) * l3 + mix * lb)), c.beta3);
      const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
      for (std::size_t k = 0; k < n; ++k) {
        s.m[k] = b1 * s.m[k] + (1 - b1) * g[k];
        s.m2[k] = b3 * s.m2[k] + (1 - b3) * g[k];
        s.v[k] = b2 * s.v[k] + (1 - b2) * g[k] * g[k];
        x[k] -= lr * ((s.m[k] / c1 + alpha * s.m2[k]) / (std::sqrt(s.v[k] / c2) + eps) + wd * x[k]);
      }
      return;
    }

    case OptimizerKind::lion:
      for (std::size_t k = 0; k < n; ++k) {
        x[k] -= lr * (sgn(b1 * s.m[k] + (1 - b1) * g[k]) + wd * x[k]);
        s.m[k] = b2 * s.m[k] + (1 - b2) * g[k];
      }
      return;

    case OptimizerKind::signum: {
      const double mu = c.momentum;
      for (std::size_t k = 0; k < n; ++k) {
        const double gk = c.coupled_weight_decay ? g[k] + wd * x[k] : g[k];
        double dir = 0;
        if (c.signum_variant == SignumVariant::nesterov) {
          s.m[k] = mu * s.m[k] + gk;
          dir = mu * s.m[k] + gk;
        } else if (c.signum_variant == SignumVariant::basic) {
          s.m[k] = mu * s.m[k] + (1 - mu) * gk;
          dir = s.m[k];
        } else {
          s.m[k] = mu * s.m[k] + (1 - c.dampening) * gk;
          dir = s.m[k];
        }
        x[k] -= lr * (sgn(dir) + (c.coupled_weight_decay ? 0.0 : wd) * x[k]);
      }
      return;
    }

    case OptimizerKind::muon:
    case OptimizerKind::dmuon: {
      if (!matrix) {
        adam(p, g, s, lr, wd, c.adam_beta1, c.adam_beta2);
        return;
      }
      const double mu = c.momentum;
      Vec dir(n);
      for (std::size_t k = 0; k < n; ++k) {
        s.m[k] = mu * s.m[k] + g[k];
        dir[k] = mu * s.m[k] + g[k];
      }
      Vec o(n, 0.0);
      if (std::any_of(dir.begin(), dir.end(), [](double v) { return v != 0.0; })) {
        o = to_flat(newton_schulz(to_mat(dir, p.rows(), p.cols()), c.ns_iters, c.ns_coeffs.a, c.ns_coeffs.b,
                                  c.ns_coeffs.c));
      }
      if (c.kind == OptimizerKind::muon) {
        for (std::size_t k = 0; k < n; ++k) x[k] -= mlr * o[k];
      } else {
        const double scale = c.rms_scale * std::sqrt(double(std::max(p.rows(), p.cols())));
        for (std::size_t k = 0; k < n; ++k) x[k] -= lr * (scale * o[k] + wd * x[k]);
      }
      return;
    }

    case OptimizerKind::soap: {
      auto eigenvectors = [&](const Mat& a) {
        if (linalg_ == Linalg::independent) return jacobi_eigenvectors(a);
        const Matrix q = sym_eigenbasis(Matrix::from_span(a.size(), a.size(), to_flat(a)));
        return to_mat(q.data(), a.size(), a.size());
      };
      auto orthogonal_factor = [&](const Mat& a) {
        if (linalg_ == Linalg::independent) return gram_schmidt_q(a);
        const Matrix q = qr_orthogonal_factor(Matrix::from_span(a.size(), a.size(), to_flat(a)));
        return to_mat(q.data(), a.size(), a.size());
      };
      if (!matrix || std::max(p.rows(), p.cols()) > c.max_precond_dim) {
        adam(p, g, s, lr, wd, b1, b2);
        return;
      }
      const std::size_t r = p.rows(), cc = p.cols();
      const Mat G = to_mat(g, r, cc);
      if (!s.soap_ready) {
        if (c.identity_init) {
          s.ql = eye(r);
          s.qr = eye(cc);
        } else {
          s.ql = eigenvectors(matmul(G, transpose(G)));
          s.qr = eigenvectors(matmul(transpose(G), G));
        }
        s.ls = zeros(r, r);
        s.rs = zeros(cc, cc);
        s.soap_ready = true;
      }
      s.t += 1;
      const double t = double(s.t);
      const double c1 = c.bias_correction ? 1 - std::pow(b1, t) : 1.0;
      const double c2 = c.bias_correction ? 1 - std::pow(b2, t) : 1.0;
      const Mat Grot = matmul(matmul(transpose(s.ql), G), s.qr);
      for (std::size_t k = 0; k < n; ++k) s.m[k] = b1 * s.m[k] + (1 - b1) * g[k];
      const Mat Mrot = matmul(matmul(transpose(s.ql), to_mat(s.m, r, cc)), s.qr);
      Mat N = zeros(r, cc);
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < cc; ++b) {
          double& v = s.v[a * cc + b];
          v = b2 * v + (1 - b2) * Grot[a][b] * Grot[a][b];
          N[a][b] = (Mrot[a][b] / c1) / (std::sqrt(v / c2) + eps);
        }
      const Vec dir = to_flat(matmul(matmul(s.ql, N), transpose(s.qr)));
      for (std::size_t k = 0; k < n; ++k) x[k] -= lr * (dir[k] + wd * x[k]);
      if (c.precond_freq > 0) {
        const Mat GGt = matmul(G, transpose(G));
        const Mat GtG = matmul(transpose(G), G);
        for (std::size_t a = 0; a < r; ++a)
          for (std::size_t b = 0; b < r; ++b) s.ls[a][b] = b2 * s.ls[a][b] + (1 - b2) * GGt[a][b];
        for (std::size_t a = 0; a < cc; ++a)
          for (std::size_t b = 0; b < cc; ++b) s.rs[a][b] = b2 * s.rs[a][b] + (1 - b2) * GtG[a][b];
        if ((s.t - 1) % c.precond_freq == 0) {
          s.ql = orthogonal_factor(matmul(s.ls, s.ql));
          s.qr = orthogonal_factor(matmul(s.rs, s.qr));
        }
      }
      return;
    }

    case OptimizerKind::sophia: {
      const double B = double(batch_size);
      for (std::size_t k = 0; k < n; ++k) {
        s.m[k] = b1 * s.m[k] + (1 - b1) * g[k];
        if (curvature != nullptr) {
          const double gh = (*curvature)[i][k];
          s.h[k] = b2 * s.h[k] + (1 - b2) * B * gh * gh;
        }
        const double ratio = std::min(std::abs(s.m[k]) / (c.rho * s.h[k] + eps), 1.0);
        x[k] -= lr * (sgn(s.m[k]) * ratio + wd * x[k]);
      }
      return;
    }

    case OptimizerKind::sfadamw: {
      s.t += 1;
      const double t = double(s.t);
      double warm = 1.0;
      if (c.sf_warmup_steps > 0) warm = std::min(1.0, t / double(c.sf_warmup_steps));
      const double lr_t = lr * std::sqrt(1 - std::pow(b2, t)) * warm;
      s.h.resize(1);  // h[0] holds the running sum of squared rates
      s.h[0] += lr_t * lr_t;
      const double w = s.h[0] > 0 ? lr_t * lr_t / s.h[0] : 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        s.v[k] = b2 * s.v[k] + (1 - b2) * g[k] * g[k];
        s.z[k] -= lr_t * (g[k] / (std::sqrt(s.v[k]) + eps) + wd * s.y[k]);
        s.xa[k] = (1 - w) * s.xa[k] + w * s.z[k];
        x[k] = s.xa[k];
      }
      return;
    }

    case OptimizerKind::mars_adamw:
    case OptimizerKind::mars_lion:
    case OptimizerKind::mars_shampoo: {
      if (!matrix) {
        adam(p, g, s, lr, wd, c.adam_beta1, c.adam_beta2);
        return;
      }
      s.t += 1;
      const double k_vr = c.eta * b1 / (1 - b1);
      Vec corr(n);
      double nn = 0;
      for (std::size_t k = 0; k < n; ++k) {
        corr[k] = g[k] + k_vr * (g[k] - s.g_prev[k]);
        nn += corr[k] * corr[k];
      }
      nn = std::sqrt(nn);
      if (c.kind != OptimizerKind::mars_shampoo && nn > 1.0)
        for (double& v : corr) v /= nn;
      for (std::size_t k = 0; k < n; ++k) s.m[k] = b1 * s.m[k] + (1 - b1) * corr[k];
      Vec dir(n, 0.0);
      if (c.kind == OptimizerKind::mars_adamw) {
        const double c1 = 1 - std::pow(b1, double(s.t)), c2 = 1 - std::pow(b2, double(s.t));
        for (std::size_t k = 0; k < n; ++k) {
          s.v[k] = b2 * s.v[k] + (1 - b2) * corr[k] * corr[k];
          dir[k] = (s.m[k] / c1) / (std::sqrt(s.v[k] / c2) + eps);
        }
      } else if (c.kind == OptimizerKind::mars_lion) {
        for (std::size_t k = 0; k < n; ++k) dir[k] = sgn(s.m[k]);
      } else if (std::any_of(s.m.begin(), s.m.end(), [](double v) { return v != 0.0; })) {
        dir = to_flat(newton_schulz(to_mat(s.m, p.rows(), p.cols()), c.ns_iters, c.ns_coeffs.a, c.ns_coeffs.b,
                                    c.ns_coeffs.c));
      }
      for (std::size_t k = 0; k < n; ++k) x[k] -= mlr * (dir[k] + c.matrix_weight_decay * x[k]);
      s.g_prev = g;
      return;
    }

    case OptimizerKind::prodigy:
      break;
  }
}

void Optimizer::prodigy(std::vector<ParamBlock>& blocks, const Gradients& g, double lr) {
  const OptimizerConfig& c = config_;
  prodigy_t_ += 1;
  const double t = double(prodigy_t_);
  const double b1 = c.beta1, b2 = c.beta2, rb2 = std::sqrt(b2);
  const double lr_t = c.bias_correction ? lr * std::sqrt(1 - std::pow(b2, t)) / (1 - std::pow(b1, t)) : lr;
  const double d = d_;
  double dot = 0, l1 = 0;
  // m, v, s live in m, v, h; the x0 snapshot in z.
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Slot& s = slots_[i];
    for (std::size_t k = 0; k < g[i].size(); ++k) {
      const double gk = g[i][k];
      s.m[k] = b1 * s.m[k] + (1 - b1) * d * gk;
      s.v[k] = b2 * s.v[k] + (1 - b2) * d * d * gk * gk;
      dot += gk * (s.z[k] - blocks[i].values[k]);
      s.h[k] = rb2 * s.h[k] + (1 - rb2) * lr_t * d * d * gk;
      l1 += std::abs(s.h[k]);
    }
  }
  r_ = rb2 * r_ + (1 - rb2) * lr_t * d * d * dot;
  const double d_new = l1 > 0 ? std::max(d, r_ / l1) : d;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Slot& s = slots_[i];
    auto& x = blocks[i].values;
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] -= lr_t * d * (s.m[k] / (std::sqrt(s.v[k]) + d * c.epsilon) + c.weight_decay * x[k]);
    }
  }
  d_ = d_new;
}

}  // namespace optlab::reference
