#include <doctest.h>

#include <cstdio>
#include <string>

#include <json.hpp>

#include "lbnet/model_io.hpp"
#include "lbnet/rng.hpp"
#include "support.hpp"

using namespace lbnet;
using nlohmann::json;
using testsup::diff;
using testsup::scrambled_params;

namespace {

ModelFile sample_model() {
  ModelFile m;
  m.activation = Activation::Tanh;
  m.params = scrambled_params({2, 5, 3}, 4.5, 91);
  return m;
}

ConvParams sample_conv() {
  Rng rng(92);
  ConvParams c;
  c.p = Tensor4(3, 2, 2, 2);
  for (auto& v : c.p.data) v = rng.normal();
  c.d = rng.normal_matrix(2, 1);
  c.b = rng.normal_matrix(2, 1);
  return c;
}

void expect_schema_error(const std::string& text) {
  try {
    (void)model_from_json(text);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Schema);
  }
}

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("model JSON round-trips every field exactly") {
  const ModelFile m = sample_model();
  const ModelFile r = model_from_json(model_to_json(m));
  CHECK(r.activation == m.activation);
  CHECK(r.params.gamma == m.params.gamma);
  REQUIRE(r.params.layers.size() == m.params.layers.size());
  for (size_t k = 0; k < m.params.layers.size(); ++k) {
    CHECK(diff(r.params.layers[k].x, m.params.layers[k].x) == 0.0);
    CHECK(diff(r.params.layers[k].y, m.params.layers[k].y) == 0.0);
    CHECK(diff(r.params.layers[k].b, m.params.layers[k].b) == 0.0);
    CHECK(r.params.layers[k].g == m.params.layers[k].g);
    CHECK(r.params.layers[k].h == m.params.layers[k].h);
  }
  REQUIRE(r.params.hidden_scales.size() == 1);
  CHECK(diff(r.params.hidden_scales[0], m.params.hidden_scales[0]) == 0.0);
  CHECK(r.conv.empty());
  CHECK(model_to_json(m).find("\"conv\"") == std::string::npos);
}

TEST_CASE("convolution layers serialize alongside the dense stack") {
  ModelFile m = sample_model();
  m.conv.push_back(sample_conv());
  const ModelFile r = model_from_json(model_to_json(m));
  REQUIRE(r.conv.size() == 1);
  CHECK(r.conv[0].p.shape == m.conv[0].p.shape);
  for (size_t i = 0; i < m.conv[0].p.data.size(); ++i)
    CHECK(r.conv[0].p.data[i] == m.conv[0].p.data[i]);
  CHECK(diff(r.conv[0].d, m.conv[0].d) == 0.0);
  CHECK(diff(r.conv[0].b, m.conv[0].b) == 0.0);
}

TEST_CASE("weights JSON round-trips exactly") {
  const ExtractedWeights ew = extract_weights(realize(scrambled_params({3, 6, 2}, 2.0, 93)));
  const ExtractedWeights r = weights_from_json(weights_to_json(ew));
  CHECK(r.gamma == ew.gamma);
  REQUIRE(r.w.size() == ew.w.size());
  for (size_t k = 0; k < ew.w.size(); ++k) {
    CHECK(diff(r.w[k], ew.w[k]) == 0.0);
    CHECK(diff(r.b[k], ew.b[k]) == 0.0);
  }
  REQUIRE(r.lambda.size() == ew.lambda.size());
  for (size_t k = 0; k < ew.lambda.size(); ++k) CHECK(diff(r.lambda[k], ew.lambda[k]) == 0.0);
}

TEST_CASE("save and load through the filesystem") {
  const ModelFile m = sample_model();
  const std::string path = "model_io_roundtrip_test.json";
  save_model(path, m);
  const ModelFile r = load_model(path);
  CHECK(r.params.gamma == m.params.gamma);
  std::remove(path.c_str());

  // the reloaded network computes the identical function
  Rng rng(97);
  const Matrix x = rng.normal_matrix(2, 5);
  CHECK(diff(forward(realize(r.params), x, r.activation),
             forward(realize(m.params), x, m.activation)) == 0.0);

  try {
    (void)load_model("does_not_exist_anywhere.json");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("any minor revision of the format is accepted, other majors are not") {
  json doc = json::parse(model_to_json(sample_model()));
  doc["format_version"] = "1.9";
  CHECK_NOTHROW((void)model_from_json(doc.dump()));
  doc["format_version"] = "2.0";
  expect_schema_error(doc.dump());
  doc.erase("format_version");
  expect_schema_error(doc.dump());
}

TEST_CASE("malformed documents report schema errors") {
  expect_schema_error("this is not json");
  expect_schema_error("[1, 2, 3]");

  json doc = json::parse(model_to_json(sample_model()));
  json broken = doc;
  broken["layers"][0].erase("X");
  expect_schema_error(broken.dump());

  broken = doc;
  broken["layers"][0]["X"][0].push_back(3.5);  // ragged row
  expect_schema_error(broken.dump());

  broken = doc;
  broken["activation"] = "softplus";
  expect_schema_error(broken.dump());

  broken = doc;
  broken["layers"][1]["d"] = json::array({0.0});  // output layer carries no d
  expect_schema_error(broken.dump());

  broken = doc;
  broken["layers"][0].erase("d");  // hidden layers need d
  expect_schema_error(broken.dump());

  broken = doc;
  broken["gamma"] = "large";
  expect_schema_error(broken.dump());
}

TEST_CASE("weights documents enforce their own layout") {
  const ExtractedWeights ew = extract_weights(realize(scrambled_params({2, 4, 1}, 1.0, 96)));
  const json doc = json::parse(weights_to_json(ew));

  auto expect_reject = [](const json& d) {
    try {
      (void)weights_from_json(d.dump());
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Schema);
    }
  };

  json broken = doc;
  broken["Lambda"].push_back(json::array({1.0, 1.0}));  // must be one fewer than W
  expect_reject(broken);

  broken = doc;
  broken["W"] = json::array();
  expect_reject(broken);

  broken = doc;
  broken["b"].erase(broken["b"].size() - 1);  // W/b counts must agree
  expect_reject(broken);
}

TEST_CASE("weights documents are distinguishable from model documents") {
  const ExtractedWeights ew = extract_weights(realize(scrambled_params({2, 4, 1}, 1.0, 94)));
  CHECK(looks_like_weights(weights_to_json(ew)));
  CHECK(!looks_like_weights(model_to_json(sample_model())));
  CHECK(!looks_like_weights("not json at all"));
  CHECK(!looks_like_weights("[]"));
}

TEST_CASE("certificate report serializes its full structure") {
  const RealizedModel m = realize(scrambled_params({2, 4, 2}, 3.0, 95));
  const CertificateReport rep = check_certificate(m);
  const json doc = json::parse(certificate_to_json(rep));
  CHECK(doc["format_version"] == kFormatVersion);
  CHECK(doc["gamma"] == 3.0);
  CHECK(doc["psd"].is_boolean());
  CHECK(doc["h_min_eig"].is_number());
  REQUIRE(doc.contains("chordal"));
  CHECK(doc["chordal"]["min_eigs"].is_array());
  CHECK(doc["chordal"]["residual"].is_number());
  REQUIRE(doc.contains("weighted"));
  CHECK(doc["weighted"]["pinv_form"].size() == 2);
  CHECK(doc["weighted"]["product"].is_number());

  // weights-only reports omit the factor sections
  const CertificateReport flat = check_certificate(extract_weights(m));
  const json fdoc = json::parse(certificate_to_json(flat));
  CHECK(!fdoc.contains("chordal"));
  CHECK(!fdoc.contains("weighted"));
}

TEST_CASE("estimator report serializes bounds and per-layer rows") {
  LipEstimate est;
  est.lower = 1.5;
  est.nan_restarts = 2;
  std::vector<LayerBound> rows(1);
  rows[0] = {0, 1.0, 0.97};
  const json doc = json::parse(lip_report_to_json(2.0, est, 0.75, rows));
  CHECK(doc["gamma"] == 2.0);
  CHECK(doc["lower_bound"] == 1.5);
  CHECK(doc["tightness"] == 0.75);
  CHECK(doc["nan_restarts"] == 2);
  REQUIRE(doc["per_layer"].size() == 1);
  CHECK(doc["per_layer"][0]["layer"] == 0);
  CHECK(doc["per_layer"][0]["certified"] == 1.0);
  CHECK(doc["per_layer"][0]["observed"] == 0.97);

  const json bare = json::parse(lip_report_to_json(2.0, est, 0.75, {}));
  CHECK(!bare.contains("per_layer"));
}

}  // TEST_SUITE
