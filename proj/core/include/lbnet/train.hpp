#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbnet/sandwich.hpp"

namespace lbnet {

struct TrainConfig {
  double gamma = 1.0;
  int width = 86;  // width of every hidden layer
  int depth = 8;   // number of hidden layers
  int epochs = 200;
  int batch_size = 50;
  double max_lr = 0.01;
  double knee = 0.5;  // fraction of epochs spent ramping the rate up
  uint64_t seed = 1;
  int n_train = 300;
  int n_test = 200;
  Activation activation = Activation::Relu;

  // Reduced-budget bound probe recorded per epoch in the metrics. Costs a
  // couple of hundred forward passes per epoch; disable for raw speed.
  bool track_tightness = true;
  int probe_restarts = 2;
  int probe_iters = 50;

  // Re-checks the certificate after every epoch and throws if it ever
  // fails. It cannot fail by construction; meant for tests.
  bool certify_every_epoch = false;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  double tightness = 0.0;  // NaN when tracking is disabled
};

// Columns are samples; one row per signal dimension (here 1 x n).
struct Dataset {
  Matrix x;
  Matrix y;
};

struct TrainResult {
  DirectParams params;
  std::vector<EpochStats> history;
};

// 1 on [-2, -1) and [0, 1); 0 on [-1, 0) and [1, 2]. Throws outside [-2, 2].
double square_wave(double x);

// n samples with x ~ U(-2, 2) and y = square_wave(x).
Dataset sample_square_wave(int n, uint64_t seed);

// Triangular schedule over epochs: 0 up to max_lr at knee * epochs, back
// down to (almost) 0 at the end. Constant within an epoch.
double lr_at(int epoch, const TrainConfig& cfg);

// Mean squared error of the realized model over a dataset.
double mse_of(const RealizedModel& m, const Dataset& d, Activation act);

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the free parameters with the
// triangular schedule, minimizing MSE on a freshly sampled square-wave set.
// epochs = 0 returns the initialization untouched. Throws Diverged (with the
// epoch index) if the loss leaves the reals.
TrainResult fit(const TrainConfig& cfg);

// epoch,lr,train_mse,test_mse,tightness rows; tightness left blank when NaN.
void write_metrics_csv(const std::string& path, const std::vector<EpochStats>& history);

}  // namespace lbnet
