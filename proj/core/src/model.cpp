#include "causalfm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causalfm/error.hpp"
#include "causalfm/rng.hpp"

namespace causalfm {

namespace {

using Vector = Eigen::VectorXd;
using ConstMat = Eigen::Map<const RowMatrix>;
using MutMat = Eigen::Map<RowMatrix>;
using ConstVec = Eigen::Map<const Vector>;
using MutVec = Eigen::Map<Vector>;

constexpr double kLayerNormEps = 1e-5;

struct LayerOffsets {
  std::size_t ln1g, ln1b, wq, bq, wk, bk, wv, bv, wo, bo, ln2g, ln2b, w1, b1, w2, b2;
};

struct Offsets {
  std::size_t enc_xw, enc_xb, enc_aw, enc_ab, enc_yw, enc_yb, mask;
  std::vector<LayerOffsets> layers;
  std::size_t lnfg, lnfb, hw1, hb1, hw2, hb2;
  std::size_t total = 0;
  std::vector<ParamGroup> groups;

  std::size_t add(std::string name, std::size_t size) {
    groups.push_back({std::move(name), total, size});
    const std::size_t offset = total;
    total += size;
    return offset;
  }
};

Offsets compute_offsets(const ArchConfig& a) {
  const std::size_t D = a.d_model, P = a.d_x_max, F = a.d_ff, K = a.n_classes;
  Offsets o{};
  o.enc_xw = o.add("enc_x.W", D * P);
  o.enc_xb = o.add("enc_x.b", D);
  o.enc_aw = o.add("enc_a.w", D);
  o.enc_ab = o.add("enc_a.b", D);
  o.enc_yw = o.add("enc_y.w", D);
  o.enc_yb = o.add("enc_y.b", D);
  o.mask = o.add("mask", D);
  for (std::size_t l = 0; l < a.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerOffsets L{};
    L.ln1g = o.add(p + "ln1.g", D);
    L.ln1b = o.add(p + "ln1.b", D);
    L.wq = o.add(p + "Wq", D * D);
    L.bq = o.add(p + "bq", D);
    L.wk = o.add(p + "Wk", D * D);
    L.bk = o.add(p + "bk", D);
    L.wv = o.add(p + "Wv", D * D);
    L.bv = o.add(p + "bv", D);
    L.wo = o.add(p + "Wo", D * D);
    L.bo = o.add(p + "bo", D);
    L.ln2g = o.add(p + "ln2.g", D);
    L.ln2b = o.add(p + "ln2.b", D);
    L.w1 = o.add(p + "W1", F * D);
    L.b1 = o.add(p + "b1", F);
    L.w2 = o.add(p + "W2", D * F);
    L.b2 = o.add(p + "b2", D);
    o.layers.push_back(L);
  }
  o.lnfg = o.add("lnf.g", D);
  o.lnfb = o.add("lnf.b", D);
  o.hw1 = o.add("head.W1", D * D);
  o.hb1 = o.add("head.b1", D);
  o.hw2 = o.add("head.W2", K * D);
  o.hb2 = o.add("head.b2", K);
  return o;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

struct LayerNormCache {
  RowMatrix xhat;
  Vector rstd;
};

RowMatrix layer_norm(const RowMatrix& x, const double* g, const double* b, LayerNormCache& cache) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  cache.xhat.resize(rows, cols);
  cache.rstd.resize(rows);
  const ConstVec gain(g, cols), bias(b, cols);
  RowMatrix y(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.rstd(r) = rstd;
    cache.xhat.row(r) = (x.row(r).array() - mu) * rstd;
    y.row(r) = cache.xhat.row(r).array() * gain.transpose().array() + bias.transpose().array();
  }
  return y;
}

RowMatrix layer_norm_backward(const RowMatrix& dy, const LayerNormCache& cache, const double* g,
                              double* dg, double* db) {
  const Eigen::Index rows = dy.rows(), cols = dy.cols();
  const ConstVec gain(g, cols);
  MutVec dgain(dg, cols), dbias(db, cols);
  // Reduce into aligned temporaries: summing straight into the (arbitrarily
  // aligned) gradient buffer lets the alignment change the summation order.
  const Vector sum_g = (dy.array() * cache.xhat.array()).colwise().sum().transpose().matrix();
  const Vector sum_b = dy.colwise().sum().transpose();
  dgain += sum_g;
  dbias += sum_b;
  RowMatrix dx(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::RowVectorXd dxhat = dy.row(r).array() * gain.transpose().array();
    const double mean_d = dxhat.mean();
    const double mean_dx = (dxhat.array() * cache.xhat.row(r).array()).mean();
    dx.row(r) = cache.rstd(r) * (dxhat.array() - mean_d - cache.xhat.row(r).array() * mean_dx);
  }
  return dx;
}

// y = x W^T + b with W stored (out x in).
RowMatrix linear(const RowMatrix& x, const double* w, const double* b, std::size_t out) {
  const ConstMat W(w, static_cast<Eigen::Index>(out), x.cols());
  RowMatrix y = x * W.transpose();
  y.rowwise() += ConstVec(b, static_cast<Eigen::Index>(out)).transpose();
  return y;
}

// Accumulates parameter gradients and returns dx.
RowMatrix linear_backward(const RowMatrix& dy, const RowMatrix& x, const double* w, double* dw,
                          double* db) {
  const Eigen::Index out = dy.cols(), in = x.cols();
  MutMat(dw, out, in).noalias() += dy.transpose() * x;
  const Vector sum_b = dy.colwise().sum().transpose();
  MutVec(db, out) += sum_b;
  return dy * ConstMat(w, out, in);
}

void softmax_rows(RowMatrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

struct LayerCache {
  std::size_t q0 = 0;  // first row that the layer outputs
  RowMatrix h_in;      // all rows
  LayerNormCache ln1;
  RowMatrix u1;
  RowMatrix q, k, v;
  std::vector<RowMatrix> p;
  RowMatrix o;
  RowMatrix h_mid;
  LayerNormCache ln2;
  RowMatrix u2;
  RowMatrix f_pre, f_act;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  LayerNormCache lnf;
  RowMatrix uf;
  RowMatrix z_pre, z;
  RowMatrix probs;
};

class Network {
 public:
  Network(const ArchConfig& arch, const double* params)
      : a_(arch), o_(compute_offsets(arch)), w_(params) {}

  RowMatrix forward(const PreparedInput& in, ForwardCache* cache) const {
    const std::size_t D = a_.d_model, n = in.n(), m = in.m();
    const Eigen::Index T = static_cast<Eigen::Index>(n + m);
    RowMatrix h(T, D);
    {
      RowMatrix xs(T, a_.d_x_max);
      xs.topRows(n) = in.x_ctx;
      xs.bottomRows(m) = in.x_query;
      h = linear(xs, w_ + o_.enc_xw, w_ + o_.enc_xb, D);
      const ConstVec wa(w_ + o_.enc_aw, D), ba(w_ + o_.enc_ab, D);
      const ConstVec wy(w_ + o_.enc_yw, D), by(w_ + o_.enc_yb, D);
      const ConstVec mask(w_ + o_.mask, D);
      for (std::size_t r = 0; r < n; ++r) {
        h.row(r) += (in.a_ctx(r) * wa + ba + in.y_ctx(r) * wy + by).transpose();
      }
      for (std::size_t r = n; r < n + m; ++r) h.row(r) += mask.transpose();
    }

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.layers.assign(a_.n_layers, {});
    for (std::size_t l = 0; l < a_.n_layers; ++l) {
      const bool last = l + 1 == a_.n_layers;
      h = layer_forward(o_.layers[l], h, n, last ? n : 0, c.layers[l], cache != nullptr);
    }
    // h now holds the query rows only.
    c.uf = layer_norm(h, w_ + o_.lnfg, w_ + o_.lnfb, c.lnf);
    c.z_pre = linear(c.uf, w_ + o_.hw1, w_ + o_.hb1, D);
    c.z = c.z_pre.unaryExpr([](double x) { return gelu(x); });
    RowMatrix logits = linear(c.z, w_ + o_.hw2, w_ + o_.hb2, a_.n_classes);
    softmax_rows(logits);
    c.probs = logits;
    return logits;
  }

  void backward(const PreparedInput& in, const ForwardCache& c, const RowMatrix& dlogits,
                double* g) const {
    const std::size_t D = a_.d_model, n = in.n(), m = in.m();
    RowMatrix dz = linear_backward(dlogits, c.z, w_ + o_.hw2, g + o_.hw2, g + o_.hb2);
    RowMatrix dz_pre = dz.array() * c.z_pre.unaryExpr([](double x) { return gelu_grad(x); }).array();
    RowMatrix duf = linear_backward(dz_pre, c.uf, w_ + o_.hw1, g + o_.hw1, g + o_.hb1);
    RowMatrix dh = layer_norm_backward(duf, c.lnf, w_ + o_.lnfg, g + o_.lnfg, g + o_.lnfb);

    for (std::size_t l = a_.n_layers; l-- > 0;) {
      dh = layer_backward(o_.layers[l], c.layers[l], dh, n, g);
    }

    // Encoders; dh covers all n + m rows.
    RowMatrix xs(n + m, a_.d_x_max);
    xs.topRows(n) = in.x_ctx;
    xs.bottomRows(m) = in.x_query;
    linear_backward(dh, xs, w_ + o_.enc_xw, g + o_.enc_xw, g + o_.enc_xb);
    MutVec dwa(g + o_.enc_aw, D), dba(g + o_.enc_ab, D), dwy(g + o_.enc_yw, D), dby(g + o_.enc_yb, D);
    MutVec dmask(g + o_.mask, D);
    for (std::size_t r = 0; r < n; ++r) {
      dwa += in.a_ctx(r) * dh.row(r).transpose();
      dba += dh.row(r).transpose();
      dwy += in.y_ctx(r) * dh.row(r).transpose();
      dby += dh.row(r).transpose();
    }
    for (std::size_t r = n; r < n + m; ++r) dmask += dh.row(r).transpose();
  }

 private:
  RowMatrix layer_forward(const LayerOffsets& L, const RowMatrix& h, std::size_t n, std::size_t q0,
                          LayerCache& c, bool keep) const {
    const std::size_t D = a_.d_model, H = a_.n_heads, dh = D / H;
    const Eigen::Index T = h.rows();
    const Eigen::Index tq = T - static_cast<Eigen::Index>(q0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    c.q0 = q0;
    if (keep) c.h_in = h;
    c.u1 = layer_norm(h, w_ + L.ln1g, w_ + L.ln1b, c.ln1);
    const RowMatrix u_ctx = c.u1.topRows(n);
    c.k = linear(u_ctx, w_ + L.wk, w_ + L.bk, D);
    c.v = linear(u_ctx, w_ + L.wv, w_ + L.bv, D);
    c.q = linear(RowMatrix(c.u1.bottomRows(tq)), w_ + L.wq, w_ + L.bq, D);
    c.o.resize(tq, D);
    c.p.assign(H, {});
    for (std::size_t head = 0; head < H; ++head) {
      const auto cols = static_cast<Eigen::Index>(head * dh);
      const auto width = static_cast<Eigen::Index>(dh);
      RowMatrix s = (c.q.middleCols(cols, width) * c.k.middleCols(cols, width).transpose()) * scale;
      softmax_rows(s);
      c.o.middleCols(cols, width).noalias() = s * c.v.middleCols(cols, width);
      c.p[head] = std::move(s);
    }
    c.h_mid = h.bottomRows(tq) + linear(c.o, w_ + L.wo, w_ + L.bo, D);
    c.u2 = layer_norm(c.h_mid, w_ + L.ln2g, w_ + L.ln2b, c.ln2);
    c.f_pre = linear(c.u2, w_ + L.w1, w_ + L.b1, a_.d_ff);
    c.f_act = c.f_pre.unaryExpr([](double x) { return gelu(x); });
    return c.h_mid + linear(c.f_act, w_ + L.w2, w_ + L.b2, D);
  }

  // dout covers rows [q0, T); returns the gradient for all T input rows.
  RowMatrix layer_backward(const LayerOffsets& L, const LayerCache& c, const RowMatrix& dout,
                           std::size_t n, double* g) const {
    const std::size_t D = a_.d_model, H = a_.n_heads, hd = D / H;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    const Eigen::Index T = c.u1.rows();
    const Eigen::Index tq = dout.rows();

    // Feed-forward block.
    RowMatrix dact = linear_backward(dout, c.f_act, w_ + L.w2, g + L.w2, g + L.b2);
    RowMatrix dpre = dact.array() * c.f_pre.unaryExpr([](double x) { return gelu_grad(x); }).array();
    RowMatrix du2 = linear_backward(dpre, c.u2, w_ + L.w1, g + L.w1, g + L.b1);
    RowMatrix dmid = dout + layer_norm_backward(du2, c.ln2, w_ + L.ln2g, g + L.ln2g, g + L.ln2b);

    // Attention block.
    RowMatrix d_o = linear_backward(dmid, c.o, w_ + L.wo, g + L.wo, g + L.bo);
    RowMatrix dq(tq, D), dk = RowMatrix::Zero(static_cast<Eigen::Index>(n), D),
        dv = RowMatrix::Zero(static_cast<Eigen::Index>(n), D);
    for (std::size_t head = 0; head < H; ++head) {
      const auto cols = static_cast<Eigen::Index>(head * hd);
      const auto width = static_cast<Eigen::Index>(hd);
      const RowMatrix& p = c.p[head];
      const RowMatrix dO = d_o.middleCols(cols, width);
      RowMatrix dp = dO * c.v.middleCols(cols, width).transpose();
      dv.middleCols(cols, width).noalias() += p.transpose() * dO;
      const Vector rows = (dp.array() * p.array()).rowwise().sum();
      RowMatrix ds = p.array() * (dp.colwise() - rows).array();
      ds *= scale;
      dq.middleCols(cols, width).noalias() = ds * c.k.middleCols(cols, width);
      dk.middleCols(cols, width).noalias() += ds.transpose() * c.q.middleCols(cols, width);
    }
    RowMatrix du1 = RowMatrix::Zero(T, D);
    du1.bottomRows(tq) += linear_backward(dq, RowMatrix(c.u1.bottomRows(tq)), w_ + L.wq, g + L.wq, g + L.bq);
    const RowMatrix u_ctx = c.u1.topRows(static_cast<Eigen::Index>(n));
    du1.topRows(static_cast<Eigen::Index>(n)) += linear_backward(dk, u_ctx, w_ + L.wk, g + L.wk, g + L.bk);
    du1.topRows(static_cast<Eigen::Index>(n)) += linear_backward(dv, u_ctx, w_ + L.wv, g + L.wv, g + L.bv);
    RowMatrix dh = layer_norm_backward(du1, c.ln1, w_ + L.ln1g, g + L.ln1g, g + L.ln1b);
    dh.bottomRows(tq) += dmid;
    return dh;
  }

  const ArchConfig& a_;
  Offsets o_;
  const double* w_;
};

void check_finite(const RowMatrix& m, const char* what) {
  if (!m.allFinite()) throw InputError(std::string("non-finite values in ") + what);
}

}  // namespace

void ArchConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, std::string("invalid architecture '") + key + "': " + what);
  };
  require(d_model >= 1, "d_model", "must be >= 1");
  require(n_heads >= 1 && d_model % n_heads == 0, "n_heads", "must divide d_model");
  require(n_layers >= 1, "n_layers", "must be >= 1");
  require(d_ff >= 1, "d_ff", "must be >= 1");
  require(n_classes >= 2, "n_classes", "must be >= 2");
  require(max_context >= 2, "max_context", "must be >= 2");
  require(d_x_max >= 1, "d_x_max", "must be >= 1");
}

std::vector<ParamGroup> param_layout(const ArchConfig& arch) { return compute_offsets(arch).groups; }

std::size_t param_count(const ArchConfig& arch) { return compute_offsets(arch).total; }

PreparedInput prepare_input(const ArchConfig& arch, const Dataset& context, const QuerySet& queries) {
  const std::size_t n = context.n();
  if (n == 0) throw EmptyContextError("context has no rows");
  if (n > arch.max_context) {
    throw InputError("context has " + std::to_string(n) + " rows; max_context is " +
                     std::to_string(arch.max_context));
  }
  const std::size_t d_x = context.d_x();
  const std::size_t m = queries.m();
  if (m > 0 && queries.d_x != d_x) throw InputError("query dimension does not match the context");
  if (queries.d_x != 0 && queries.x.size() % queries.d_x != 0) throw InputError("ragged query matrix");

  for (std::size_t i = 0; i < n; ++i) {
    for (double v : context.x(i)) {
      if (!std::isfinite(v)) throw InputError("non-finite covariate in context");
    }
    if (!std::isfinite(context.a(i)) || !std::isfinite(context.y(i))) {
      throw InputError("non-finite treatment or outcome in context");
    }
  }
  for (double v : queries.x) {
    if (!std::isfinite(v)) throw InputError("non-finite query covariate");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto xi = context.x(i), xj = context.x(j);
    for (std::size_t k = 0; k < d_x; ++k) {
      if (xi[k] != xj[k]) return xi[k] < xj[k];
    }
    if (context.a(i) != context.a(j)) return context.a(i) < context.a(j);
    return context.y(i) < context.y(j);
  });

  const std::size_t used = std::min(d_x, arch.d_x_max);
  auto stats = [&](auto value) {
    double mean = 0.0;
    for (std::size_t i : order) mean += value(i);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i : order) var += (value(i) - mean) * (value(i) - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    return std::pair<double, double>{mean, sd > 1e-12 ? sd : 1.0};
  };

  PreparedInput in;
  in.x_ctx = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(arch.d_x_max));
  in.x_query = RowMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(arch.d_x_max));
  for (std::size_t k = 0; k < used; ++k) {
    const auto [mean, sd] = stats([&](std::size_t i) { return context.x(i)[k]; });
    for (std::size_t r = 0; r < n; ++r) in.x_ctx(r, k) = (context.x(order[r])[k] - mean) / sd;
    for (std::size_t r = 0; r < m; ++r) in.x_query(r, k) = (queries.x[r * d_x + k] - mean) / sd;
  }
  const auto [y_mean, y_std] = stats([&](std::size_t i) { return context.y(i); });
  in.y_mean = y_mean;
  in.y_std = y_std;
  in.y_ctx.resize(static_cast<Eigen::Index>(n));
  in.a_ctx.resize(static_cast<Eigen::Index>(n));
  const bool continuous = context.schema().treatment_type == TreatmentType::continuous;
  const auto [a_mean, a_std] = continuous ? stats([&](std::size_t i) { return context.a(i); })
                                          : std::pair<double, double>{0.0, 1.0};
  for (std::size_t r = 0; r < n; ++r) {
    in.y_ctx(r) = (context.y(order[r]) - y_mean) / y_std;
    in.a_ctx(r) = (context.a(order[r]) - a_mean) / a_std;
  }
  return in;
}

PfnModel::PfnModel(const ArchConfig& arch, std::uint64_t seed) : arch_(arch) {
  arch_.validate();
  const Offsets o = compute_offsets(arch_);
  params_.assign(o.total, 0.0);
  Rng rng(seed, 0, 3);
  const double D = static_cast<double>(arch_.d_model);
  const double residual = 1.0 / std::sqrt(2.0 * static_cast<double>(arch_.n_layers));
  auto fill = [&](std::size_t offset, std::size_t size, double sd) {
    for (std::size_t i = 0; i < size; ++i) params_[offset + i] = sd * rng.normal();
  };
  auto ones = [&](std::size_t offset) {
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(offset), arch_.d_model, 1.0);
  };
  fill(o.enc_xw, arch_.d_model * arch_.d_x_max, 1.0 / std::sqrt(static_cast<double>(arch_.d_x_max)));
  fill(o.enc_aw, arch_.d_model, 1.0);
  fill(o.enc_yw, arch_.d_model, 1.0);
  fill(o.mask, arch_.d_model, 1.0);
  for (const auto& L : o.layers) {
    ones(L.ln1g);
    ones(L.ln2g);
    fill(L.wq, arch_.d_model * arch_.d_model, 1.0 / std::sqrt(D));
    fill(L.wk, arch_.d_model * arch_.d_model, 1.0 / std::sqrt(D));
    fill(L.wv, arch_.d_model * arch_.d_model, 1.0 / std::sqrt(D));
    fill(L.wo, arch_.d_model * arch_.d_model, residual / std::sqrt(D));
    fill(L.w1, arch_.d_ff * arch_.d_model, 1.0 / std::sqrt(D));
    fill(L.w2, arch_.d_model * arch_.d_ff, residual / std::sqrt(static_cast<double>(arch_.d_ff)));
  }
  ones(o.lnfg);
  fill(o.hw1, arch_.d_model * arch_.d_model, 1.0 / std::sqrt(D));
  fill(o.hw2, arch_.n_classes * arch_.d_model, 1.0 / std::sqrt(D));
}

PfnModel::PfnModel(const ArchConfig& arch, std::vector<double> params)
    : arch_(arch), params_(std::move(params)) {
  arch_.validate();
  if (params_.size() != causalfm::param_count(arch_)) {
    throw InputError("parameter vector has " + std::to_string(params_.size()) + " entries; layout needs " +
                     std::to_string(causalfm::param_count(arch_)));
  }
  for (double p : params_) {
    if (!std::isfinite(p)) throw InputError("non-finite model parameter");
  }
}

void PfnModel::zero_head() {
  const Offsets o = compute_offsets(arch_);
  std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(o.hw2), arch_.n_classes * arch_.d_model, 0.0);
  std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(o.hb2), arch_.n_classes, 0.0);
}

RowMatrix PfnModel::forward(const Dataset& context, const QuerySet& queries) const {
  return forward(prepare_input(arch_, context, queries));
}

RowMatrix PfnModel::forward(const PreparedInput& input) const {
  if (input.n() == 0) throw EmptyContextError("context has no rows");
  check_finite(input.x_ctx, "context covariates");
  check_finite(input.x_query, "query covariates");
  const Network net(arch_, params_.data());
  return net.forward(input, nullptr);
}

double PfnModel::loss_gradient(const PreparedInput& input, std::span<const int> targets,
                               std::span<double> grad) const {
  if (input.n() == 0) throw EmptyContextError("context has no rows");
  if (targets.size() != input.m()) throw InputError("one target per query required");
  if (grad.size() != params_.size()) throw InputError("gradient buffer has the wrong length");
  const Network net(arch_, params_.data());
  ForwardCache cache;
  const RowMatrix probs = net.forward(input, &cache);
  const NllResult loss = nll_loss(probs, targets);
  const double m = static_cast<double>(input.m());
  RowMatrix dlogits = probs;
  for (std::size_t r = 0; r < input.m(); ++r) dlogits(static_cast<Eigen::Index>(r), targets[r]) -= 1.0;
  dlogits /= m;
  net.backward(input, cache, dlogits, grad.data());
  return loss.value;
}

NllResult nll_loss(const RowMatrix& probs, std::span<const int> targets) {
  if (static_cast<std::size_t>(probs.rows()) != targets.size() || targets.empty()) {
    throw InputError("nll_loss: one target per probability row required");
  }
  NllResult result;
  double acc = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const int t = targets[r];
    if (t < 0 || t >= probs.cols()) throw InputError("nll_loss: target class out of range");
    double p = probs(static_cast<Eigen::Index>(r), t);
    if (p < kProbabilityFloor) {
      p = kProbabilityFloor;
      result.clamped = true;
    }
    acc -= std::log(p);
  }
  result.value = acc / static_cast<double>(targets.size());
  return result;
}

CatePrediction predict_cate(std::span<const double> probs, std::span<const double> bin_values) {
  if (probs.size() != bin_values.size()) throw InputError("predict_cate: one bin value per class required");
  CatePrediction out;
  out.class_probs.assign(probs.begin(), probs.end());
  for (std::size_t k = 0; k < probs.size(); ++k) out.point += probs[k] * bin_values[k];
  return out;
}

}  // namespace causalfm
