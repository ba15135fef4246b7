#include "lbnet/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "lbnet/certify.hpp"
#include "lbnet/diffmodel.hpp"
#include "lbnet/lipest.hpp"
#include "lbnet/rng.hpp"

namespace lbnet {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

void validate(const TrainConfig& c) {
  detail::require(c.gamma > 0.0, ErrorKind::Domain, "fit: gamma must be positive");
  detail::require(c.width >= 1 && c.depth >= 1, ErrorKind::Domain,
                  "fit: width and depth must be positive");
  detail::require(c.epochs >= 0, ErrorKind::Domain, "fit: epochs must be non-negative");
  detail::require(c.batch_size >= 1 && c.n_train >= 1 && c.n_test >= 1, ErrorKind::Domain,
                  "fit: sample and batch counts must be positive");
  detail::require(c.max_lr > 0.0, ErrorKind::Domain, "fit: max_lr must be positive");
  detail::require(c.knee > 0.0 && c.knee < 1.0, ErrorKind::Domain,
                  "fit: knee must lie strictly inside (0, 1)");
  if (c.track_tightness)
    detail::require(c.probe_restarts >= 1 && c.probe_iters >= 1, ErrorKind::Domain,
                    "fit: probe budget must be positive");
}

// One Adam slot per parameter tensor, in a fixed walk order.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  int t = 0;

  void add_slot(int rows, int cols) {
    m.emplace_back(rows, cols);
    v.emplace_back(rows, cols);
  }

  void apply(int slot, Matrix& param, const Matrix& grad, double lr) {
    Matrix &mm = m[slot], &vv = v[slot];
    const double c1 = 1.0 - std::pow(kBeta1, t);
    const double c2 = 1.0 - std::pow(kBeta2, t);
    for (size_t i = 0; i < param.data.size(); ++i) {
      const double g = grad.data[i];
      mm.data[i] = kBeta1 * mm.data[i] + (1.0 - kBeta1) * g;
      vv.data[i] = kBeta2 * vv.data[i] + (1.0 - kBeta2) * g * g;
      param.data[i] -= lr * (mm.data[i] / c1) / (std::sqrt(vv.data[i] / c2) + kEps);
    }
  }

  void apply_scalar(int slot, double& param, const Matrix& grad, double lr) {
    Matrix holder(1, 1);
    holder(0, 0) = param;
    apply(slot, holder, grad, lr);
    param = holder(0, 0);
  }
};

Matrix columns(const Matrix& m, const std::vector<int>& idx, int lo, int hi) {
  Matrix out(m.rows, hi - lo);
  for (int j = lo; j < hi; ++j)
    for (int i = 0; i < m.rows; ++i) out(i, j - lo) = m(i, idx[j]);
  return out;
}

}  // namespace

double square_wave(double x) {
  detail::require(x >= -2.0 && x <= 2.0, ErrorKind::Domain, "square_wave: x outside [-2, 2]");
  return (x < -1.0 || (x >= 0.0 && x < 1.0)) ? 1.0 : 0.0;
}

Dataset sample_square_wave(int n, uint64_t seed) {
  detail::require(n >= 1, ErrorKind::Domain, "sample_square_wave: n must be positive");
  Rng rng(seed);
  Dataset d;
  d.x = Matrix(1, n);
  d.y = Matrix(1, n);
  for (int i = 0; i < n; ++i) {
    d.x(0, i) = rng.uniform(-2.0, 2.0);
    d.y(0, i) = square_wave(d.x(0, i));
  }
  return d;
}

double lr_at(int epoch, const TrainConfig& cfg) {
  detail::require(epoch >= 0 && epoch < cfg.epochs, ErrorKind::Domain,
                  "lr_at: epoch outside the schedule");
  const double k = cfg.knee * cfg.epochs;
  if (epoch < k) return cfg.max_lr * epoch / k;
  return cfg.max_lr * (cfg.epochs - epoch) / (cfg.epochs - k);
}

double mse_of(const RealizedModel& m, const Dataset& d, Activation act) {
  const Matrix pred = forward(m, d.x, act);
  double s = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const double e = pred.data[i] - d.y.data[i];
    s += e * e;
  }
  return s / static_cast<double>(pred.data.size());
}

TrainResult fit(const TrainConfig& cfg) {
  validate(cfg);

  std::vector<int> widths(static_cast<size_t>(cfg.depth) + 2, cfg.width);
  widths.front() = 1;
  widths.back() = 1;

  TrainResult out;
  out.params = init_params(widths, cfg.gamma, cfg.seed);
  if (cfg.epochs == 0) return out;

  const Dataset train = sample_square_wave(cfg.n_train, cfg.seed + kGolden);
  const Dataset test = sample_square_wave(cfg.n_test, cfg.seed + 2 * kGolden);

  DirectParams& p = out.params;
  const int last = static_cast<int>(p.layers.size()) - 1;
  AdamState adam;
  for (int k = 0; k <= last; ++k) {
    const auto& l = p.layers[k];
    adam.add_slot(l.x.rows, l.x.cols);
    adam.add_slot(l.y.rows, l.y.cols);
    adam.add_slot(l.b.rows, 1);
    adam.add_slot(1, 1);  // g
    adam.add_slot(1, 1);  // h
    if (k < last) adam.add_slot(p.hidden_scales[k].rows, 1);
  }

  Rng shuffle_rng(cfg.seed + 3 * kGolden);
  std::vector<int> order(cfg.n_train);
  std::iota(order.begin(), order.end(), 0);
  const int batches = (cfg.n_train + cfg.batch_size - 1) / cfg.batch_size;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    for (int i = cfg.n_train - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.uniform() * (i + 1));
      std::swap(order[i], order[j]);
    }

    for (int b = 0; b < batches; ++b) {
      const int lo = b * cfg.batch_size;
      const int hi = std::min(cfg.n_train, lo + cfg.batch_size);

      ad::Tape t;
      TapedParams tp = make_leaves(t, p);
      ad::Var input = t.constant(columns(train.x, order, lo, hi));
      ad::Var target = t.constant(columns(train.y, order, lo, hi));
      ad::Var loss = mse(t, taped_forward(t, tp, input, cfg.activation), target);
      detail::require(std::isfinite(t.value(loss)(0, 0)), ErrorKind::Diverged,
                      "fit: loss diverged at epoch " + std::to_string(epoch));
      t.backward(loss);

      adam.t += 1;
      int slot = 0;
      for (int k = 0; k <= last; ++k) {
        auto& l = p.layers[k];
        const TapedLayer& tl = tp.layers[k];
        adam.apply(slot++, l.x, t.grad(tl.x), lr);
        adam.apply(slot++, l.y, t.grad(tl.y), lr);
        adam.apply(slot++, l.b, t.grad(tl.b), lr);
        adam.apply_scalar(slot++, l.g, t.grad(tl.g), lr);
        adam.apply_scalar(slot++, l.h, t.grad(tl.h), lr);
        if (k < last) adam.apply(slot++, p.hidden_scales[k], t.grad(tl.d), lr);
      }
    }

    const RealizedModel m = realize(p);
    EpochStats row;
    row.epoch = epoch;
    row.lr = lr;
    row.train_mse = mse_of(m, train, cfg.activation);
    row.test_mse = mse_of(m, test, cfg.activation);
    if (cfg.track_tightness) {
      LipSettings probe;
      probe.restarts = cfg.probe_restarts;
      probe.iters = cfg.probe_iters;
      probe.seed = cfg.seed + kGolden * static_cast<uint64_t>(epoch + 17);
      row.tightness = tightness(m, cfg.activation, probe);
    } else {
      row.tightness = std::numeric_limits<double>::quiet_NaN();
    }
    out.history.push_back(row);

    if (cfg.certify_every_epoch) {
      const CertificateReport rep = check_certificate(m);
      detail::require(rep.psd, ErrorKind::Internal,
                      "fit: certificate failed at epoch " + std::to_string(epoch) +
                          " (this should be impossible by construction)");
    }
  }
  return out;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream f(path);
  detail::require(f.good(), ErrorKind::Io, "write_metrics_csv: cannot open " + path);
  f << "epoch,lr,train_mse,test_mse,tightness\n";
  std::ostringstream line;
  line.precision(10);
  for (const auto& row : history) {
    line.str("");
    line << row.epoch << ',' << row.lr << ',' << row.train_mse << ',' << row.test_mse << ',';
    if (std::isfinite(row.tightness)) line << row.tightness;
    f << line.str() << '\n';
  }
  detail::require(f.good(), ErrorKind::Io, "write_metrics_csv: write failed for " + path);
}

}  // namespace lbnet
