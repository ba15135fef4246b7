// Command-line front end: train, certify, probe, convert and export models.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lbnet/certify.hpp"
#include "lbnet/converse.hpp"
#include "lbnet/lipest.hpp"
#include "lbnet/model_io.hpp"
#include "lbnet/train.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitNotPsd = 1;
constexpr int kExitError = 2;

int fail(const std::string& type, const std::string& message) {
  json doc;
  doc["error"]["type"] = type;
  doc["error"]["message"] = message;
  std::cerr << doc.dump(2) << '\n';
  return kExitError;
}

int fail(const lbnet::Error& e) { return fail(lbnet::to_string(e.kind()), e.what()); }

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  lbnet::detail::require(f.good(), lbnet::ErrorKind::Io, "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return text;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  lbnet::detail::require(f.good(), lbnet::ErrorKind::Io, "cannot open " + path + " for writing");
  f << text << '\n';
  f.flush();
  lbnet::detail::require(f.good(), lbnet::ErrorKind::Io, "write failed for " + path);
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text << '\n';
  else
    write_text(out_path, text);
}

std::string default_metrics_path(const std::string& model_out) {
  const size_t dot = model_out.rfind('.');
  const std::string stem = dot == std::string::npos ? model_out : model_out.substr(0, dot);
  return stem + "_metrics.csv";
}

struct FitArgs {
  lbnet::TrainConfig cfg;
  std::string activation = "relu";
  std::string out;
  std::string metrics;
};

struct ProbeArgs {
  lbnet::LipSettings settings;
  std::string model;
  std::string out;
  bool no_per_layer = false;
};

int run_fit(FitArgs& a) {
  a.cfg.activation = lbnet::activation_from_string(a.activation);
  const lbnet::TrainResult res = lbnet::fit(a.cfg);

  lbnet::ModelFile mf;
  mf.activation = a.cfg.activation;
  mf.params = res.params;
  lbnet::save_model(a.out, mf);
  const std::string metrics = a.metrics.empty() ? default_metrics_path(a.out) : a.metrics;
  lbnet::write_metrics_csv(metrics, res.history);

  json summary;
  summary["format_version"] = lbnet::kFormatVersion;
  summary["model"] = a.out;
  summary["metrics"] = metrics;
  if (!res.history.empty()) {
    const auto& last = res.history.back();
    summary["train_mse"] = last.train_mse;
    summary["test_mse"] = last.test_mse;
    if (std::isfinite(last.tightness)) summary["tightness"] = last.tightness;
  }
  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

int run_certify(const std::string& model_path, const std::string& out_path) {
  const std::string text = read_text(model_path);
  lbnet::CertificateReport rep;
  if (lbnet::looks_like_weights(text)) {
    rep = lbnet::check_certificate(lbnet::weights_from_json(text));
  } else {
    const lbnet::ModelFile mf = lbnet::model_from_json(text);
    lbnet::detail::require(mf.has_dense(), lbnet::ErrorKind::Schema,
                           "certify: model has no dense layers");
    rep = lbnet::check_certificate(lbnet::realize(mf.params));
  }
  emit(out_path, lbnet::certificate_to_json(rep));
  return rep.psd ? kExitOk : kExitNotPsd;
}

int run_lipest(ProbeArgs& a) {
  const lbnet::ModelFile mf = lbnet::load_model(a.model);
  lbnet::detail::require(mf.has_dense(), lbnet::ErrorKind::Schema,
                         "lipest: model has no dense layers");
  const lbnet::RealizedModel m = lbnet::realize(mf.params);
  const lbnet::LipEstimate est = lbnet::empirical_lipschitz(m, mf.activation, a.settings);
  const double tight = std::clamp(est.lower / m.gamma, 0.0, 1.0);
  std::vector<lbnet::LayerBound> layers;
  if (!a.no_per_layer) layers = lbnet::per_layer_bounds(m, mf.activation, a.settings);
  emit(a.out, lbnet::lip_report_to_json(m.gamma, est, tight, layers));
  return kExitOk;
}

int run_roundtrip(const std::string& model_path, uint64_t seed, const std::string& out_path,
                  const std::string& report_path) {
  const lbnet::ExtractedWeights ew = lbnet::load_weights(model_path);
  lbnet::DirectParams rec = lbnet::params_from_lmi(ew.w, ew.lambda, ew.gamma, seed);
  for (size_t k = 0; k < rec.layers.size(); ++k) rec.layers[k].b = ew.b[k];

  const lbnet::ExtractedWeights back = lbnet::extract_weights(lbnet::realize(rec));
  double worst = 0.0;
  json per_layer = json::array();
  for (size_t k = 0; k < ew.w.size(); ++k) {
    const double r = lbnet::max_abs(back.w[k] - ew.w[k]);
    per_layer.push_back(r);
    worst = std::max(worst, r);
  }

  if (!out_path.empty()) {
    lbnet::ModelFile mf;
    mf.activation = lbnet::Activation::Relu;  // weights carry no activation
    mf.params = rec;
    lbnet::save_model(out_path, mf);
  }
  json rep;
  rep["format_version"] = lbnet::kFormatVersion;
  rep["gamma"] = ew.gamma;
  rep["max_residual"] = worst;
  rep["per_layer_residual"] = std::move(per_layer);
  if (!out_path.empty()) rep["recovered_model"] = out_path;
  emit(report_path, rep.dump(2));
  return kExitOk;
}

int run_export(const std::string& model_path, const std::string& out_path) {
  const lbnet::ModelFile mf = lbnet::load_model(model_path);
  lbnet::detail::require(mf.has_dense(), lbnet::ErrorKind::Schema,
                         "export: model has no dense layers");
  lbnet::save_weights(out_path, lbnet::extract_weights(lbnet::realize(mf.params)));
  return kExitOk;
}

int run_figures(ProbeArgs& a, const std::string& out_dir) {
  const lbnet::ModelFile mf = lbnet::load_model(a.model);
  lbnet::detail::require(mf.has_dense(), lbnet::ErrorKind::Schema,
                         "figures: model has no dense layers");
  const lbnet::RealizedModel m = lbnet::realize(mf.params);

  const lbnet::WeightedBounds wb = lbnet::weighted_spectral_report(m);
  const std::vector<lbnet::LayerBound> stages =
      lbnet::per_layer_bounds(m, mf.activation, a.settings);
  {
    std::ofstream f(out_dir + "/layer_norms.csv");
    lbnet::detail::require(f.good(), lbnet::ErrorKind::Io,
                           "cannot write " + out_dir + "/layer_norms.csv");
    f << "layer,pinv_bound,transpose_bound,naive_norm,stage_certified,stage_observed\n";
    f.precision(10);
    for (size_t k = 0; k < wb.pinv_form.size(); ++k)
      f << k << ',' << wb.pinv_form[k] << ',' << wb.transpose_form[k] << ',' << wb.naive[k]
        << ',' << stages[k].certified << ',' << stages[k].observed << '\n';
  }
  const lbnet::LipEstimate est = lbnet::empirical_lipschitz(m, mf.activation, a.settings);
  {
    std::ofstream f(out_dir + "/tightness.csv");
    lbnet::detail::require(f.good(), lbnet::ErrorKind::Io,
                           "cannot write " + out_dir + "/tightness.csv");
    f << "gamma,lower_bound,tightness,nan_restarts,naive_product,weighted_product\n";
    f.precision(10);
    f << m.gamma << ',' << est.lower << ',' << std::clamp(est.lower / m.gamma, 0.0, 1.0) << ','
      << est.nan_restarts << ',' << wb.naive_product << ',' << wb.product << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lipschitz-bounded network toolkit"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Train a square-wave model");
  fit->add_option("--gamma", fit_args.cfg.gamma, "Lipschitz bound");
  fit->add_option("--width", fit_args.cfg.width, "hidden width");
  fit->add_option("--depth", fit_args.cfg.depth, "hidden layers");
  fit->add_option("--epochs", fit_args.cfg.epochs, "training epochs");
  fit->add_option("--seed", fit_args.cfg.seed, "RNG seed");
  fit->add_option("--batch", fit_args.cfg.batch_size, "batch size");
  fit->add_option("--max-lr", fit_args.cfg.max_lr, "peak learning rate");
  fit->add_option("--knee", fit_args.cfg.knee, "ramp fraction of the schedule");
  fit->add_option("--n-train", fit_args.cfg.n_train, "training samples");
  fit->add_option("--n-test", fit_args.cfg.n_test, "test samples");
  fit->add_option("--activation", fit_args.activation, "relu|identity|tanh")
      ->check(CLI::IsMember({"relu", "identity", "tanh"}));
  fit->add_flag_callback(
      "--no-tightness", [&] { fit_args.cfg.track_tightness = false; },
      "skip the per-epoch tightness probe");
  fit->add_option("--out", fit_args.out, "model JSON path")->required();
  fit->add_option("--metrics", fit_args.metrics, "metrics CSV path (default: <out>_metrics.csv)");

  std::string certify_model, certify_out;
  CLI::App* certify = app.add_subcommand("certify", "Check the Lipschitz certificate");
  certify->add_option("--model", certify_model, "model or weights JSON")->required();
  certify->add_option("--out", certify_out, "report path (default: stdout)");

  ProbeArgs lip_args;
  CLI::App* lipest = app.add_subcommand("lipest", "Empirical Lipschitz lower bound");
  lipest->add_option("--model", lip_args.model, "model JSON")->required();
  lipest->add_option("--restarts", lip_args.settings.restarts, "ascent restarts");
  lipest->add_option("--iters", lip_args.settings.iters, "iterations per restart");
  lipest->add_option("--step", lip_args.settings.step, "ascent step size");
  lipest->add_option("--seed", lip_args.settings.seed, "RNG seed");
  lipest->add_flag("--no-per-layer", lip_args.no_per_layer, "skip per-layer probes");
  lipest->add_option("--out", lip_args.out, "report path (default: stdout)");

  std::string rt_model, rt_out, rt_report;
  uint64_t rt_seed = 31;
  CLI::App* roundtrip = app.add_subcommand("roundtrip", "Recover parameters from weights");
  roundtrip->add_option("--model", rt_model, "weights JSON")->required();
  roundtrip->add_option("--seed", rt_seed, "RNG seed");
  roundtrip->add_option("--out", rt_out, "recovered model JSON path");
  roundtrip->add_option("--report", rt_report, "residual report path (default: stdout)");

  std::string ex_model, ex_out;
  CLI::App* exp = app.add_subcommand("export", "Export explicit weights");
  exp->add_option("--model", ex_model, "model JSON")->required();
  exp->add_option("--out", ex_out, "weights JSON path")->required();

  ProbeArgs fig_args;
  std::string fig_dir = ".";
  CLI::App* figures = app.add_subcommand("figures", "Emit per-layer and tightness CSVs");
  figures->add_option("--model", fig_args.model, "model JSON")->required();
  figures->add_option("--restarts", fig_args.settings.restarts, "ascent restarts");
  figures->add_option("--iters", fig_args.settings.iters, "iterations per restart");
  figures->add_option("--step", fig_args.settings.step, "ascent step size");
  figures->add_option("--seed", fig_args.settings.seed, "RNG seed");
  figures->add_option("--out-dir", fig_dir, "directory for the CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*fit) return run_fit(fit_args);
    if (*certify) return run_certify(certify_model, certify_out);
    if (*lipest) return run_lipest(lip_args);
    if (*roundtrip) return run_roundtrip(rt_model, rt_seed, rt_out, rt_report);
    if (*exp) return run_export(ex_model, ex_out);
    if (*figures) return run_figures(fig_args, fig_dir);
  } catch (const lbnet::Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return fail("usage", "no subcommand given");
}
