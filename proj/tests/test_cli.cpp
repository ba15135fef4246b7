#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "lbnet/model_io.hpp"

using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  const std::string err_path = "cli_stderr.tmp";
  const std::string cmd = std::string(LBNET_CLI_PATH) + " " + args + " 2>" + err_path;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  CliResult r;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(err_path);
  r.err.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  std::remove(err_path.c_str());
  return r;
}

std::string error_type(const CliResult& r) {
  return json::parse(r.err).at("error").at("type").get<std::string>();
}

// Trains one small model on first use and reuses it across cases.
const std::string& fit_model() {
  static const std::string path = [] {
    const std::string p = "cli_model.json";
    const CliResult r = run_cli(
        "fit --gamma 2 --width 6 --depth 2 --epochs 3 --batch 30 --n-train 60 "
        "--n-test 30 --seed 4 --no-tightness --out " +
        p);
    if (r.exit_code != 0) throw std::runtime_error("fit failed: " + r.err);
    return p;
  }();
  return path;
}

std::string first_line(const std::string& path) {
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  return line;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits cleanly") {
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("fit writes a model, metrics and a summary") {
  const std::string& model = fit_model();
  const CliResult r = run_cli(
      "fit --gamma 2 --width 6 --depth 2 --epochs 3 --batch 30 --n-train 60 "
      "--n-test 30 --seed 4 --no-tightness --out " +
      model);
  REQUIRE(r.exit_code == 0);
  const json summary = json::parse(r.out);
  CHECK(summary["format_version"] == lbnet::kFormatVersion);
  CHECK(summary["model"] == model);
  CHECK(summary["metrics"] == "cli_model_metrics.csv");
  CHECK(summary["train_mse"].is_number());
  CHECK(summary["test_mse"].is_number());
  CHECK(!summary.contains("tightness"));  // probe disabled

  CHECK(first_line("cli_model_metrics.csv") == "epoch,lr,train_mse,test_mse,tightness");
  const lbnet::ModelFile mf = lbnet::load_model(model);
  CHECK(mf.params.gamma == 2.0);
  CHECK(mf.params.depth() == 2);
}

TEST_CASE("certify accepts a freshly trained model") {
  const CliResult r = run_cli("certify --model " + fit_model());
  CHECK(r.exit_code == 0);
  const json rep = json::parse(r.out);
  CHECK(rep["psd"] == true);
  CHECK(rep["gamma"] == 2.0);
  CHECK(rep.contains("chordal"));  // full factor route
}

TEST_CASE("export produces weights that certify through the flat route") {
  REQUIRE(run_cli("export --model " + fit_model() + " --out cli_weights.json").exit_code == 0);
  const CliResult r = run_cli("certify --model cli_weights.json");
  CHECK(r.exit_code == 0);
  const json rep = json::parse(r.out);
  CHECK(rep["psd"] == true);
  CHECK(!rep.contains("chordal"));  // weights docs carry no factors
}

TEST_CASE("roundtrip recovers parameters from exported weights") {
  REQUIRE(run_cli("export --model " + fit_model() + " --out cli_weights.json").exit_code == 0);
  const CliResult r =
      run_cli("roundtrip --model cli_weights.json --out cli_recovered.json");
  REQUIRE(r.exit_code == 0);
  const json rep = json::parse(r.out);
  CHECK(rep["gamma"] == 2.0);
  CHECK(rep["max_residual"].get<double>() < 1e-7);
  REQUIRE(rep["per_layer_residual"].size() == 3);
  for (const auto& v : rep["per_layer_residual"]) CHECK(v.get<double>() < 1e-7);
  CHECK(rep["recovered_model"] == "cli_recovered.json");

  const CliResult cert = run_cli("certify --model cli_recovered.json");
  CHECK(cert.exit_code == 0);
  CHECK(json::parse(cert.out)["psd"] == true);
}

TEST_CASE("lipest reports a sound, deterministic lower bound") {
  const std::string args =
      "lipest --model " + fit_model() + " --restarts 2 --iters 40 --seed 5";
  const CliResult r1 = run_cli(args);
  REQUIRE(r1.exit_code == 0);
  const json rep = json::parse(r1.out);
  CHECK(rep["gamma"] == 2.0);
  CHECK(rep["lower_bound"].get<double>() <= 2.0 * (1.0 + 1e-6));
  CHECK(rep["tightness"].get<double>() >= 0.0);
  CHECK(rep["tightness"].get<double>() <= 1.0);
  REQUIRE(rep["per_layer"].size() == 3);

  const CliResult r2 = run_cli(args);
  CHECK(r2.exit_code == 0);
  CHECK(r2.out == r1.out);  // same seed, same bytes

  const CliResult bare = run_cli(args + " --no-per-layer");
  REQUIRE(bare.exit_code == 0);
  CHECK(!json::parse(bare.out).contains("per_layer"));
}

TEST_CASE("figures emits the two CSVs with pinned headers") {
  const CliResult r = run_cli("figures --model " + fit_model() +
                              " --restarts 2 --iters 30 --seed 6 --out-dir .");
  REQUIRE(r.exit_code == 0);
  CHECK(first_line("layer_norms.csv") ==
        "layer,pinv_bound,transpose_bound,naive_norm,stage_certified,stage_observed");
  CHECK(first_line("tightness.csv") ==
        "gamma,lower_bound,tightness,nan_restarts,naive_product,weighted_product");
  std::ifstream f("layer_norms.csv");
  int lines = 0;
  std::string line;
  while (std::getline(f, line)) ++lines;
  CHECK(lines == 4);  // header + one row per weight matrix
}

TEST_CASE("a certificate that fails the test exits with the dedicated code") {
  lbnet::ExtractedWeights ew;
  ew.gamma = 1.0;
  ew.w = {lbnet::Matrix(1, 1), lbnet::Matrix(1, 1)};
  ew.w[0](0, 0) = 2.0;
  ew.w[1](0, 0) = 2.0;
  ew.b = {lbnet::Matrix(1, 1), lbnet::Matrix(1, 1)};
  ew.lambda = {lbnet::Matrix(1, 1)};
  ew.lambda[0](0, 0) = 1.0;
  lbnet::save_weights("cli_bad_weights.json", ew);

  const CliResult r = run_cli("certify --model cli_bad_weights.json");
  CHECK(r.exit_code == 1);
  CHECK(json::parse(r.out)["psd"] == false);
  std::remove("cli_bad_weights.json");
}

TEST_CASE("failures surface as typed JSON on stderr with exit code 2") {
  CliResult r = run_cli("certify --model no_such_file.json");
  CHECK(r.exit_code == 2);
  CHECK(error_type(r) == "io");

  r = run_cli("fit --gamma 2");  // --out is required
  CHECK(r.exit_code == 2);
  CHECK(error_type(r) == "usage");

  r = run_cli("certify --model x.json --bogus-flag");
  CHECK(r.exit_code == 2);
  CHECK(error_type(r) == "usage");

  json doc = json::parse(lbnet::model_to_json([] {
    lbnet::ModelFile mf;
    mf.params = lbnet::init_params({1, 4, 1}, 1.0, 8);
    return mf;
  }()));
  doc["format_version"] = "2.0";
  {
    std::ofstream f("cli_bad_version.json");
    f << doc.dump(2) << '\n';
  }
  r = run_cli("certify --model cli_bad_version.json");
  CHECK(r.exit_code == 2);
  CHECK(error_type(r) == "schema");
  std::remove("cli_bad_version.json");
}

}  // TEST_SUITE
