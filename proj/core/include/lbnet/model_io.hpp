#pragma once

#include <string>
#include <vector>

#include "lbnet/certify.hpp"
#include "lbnet/circconv.hpp"
#include "lbnet/lipest.hpp"
#include "lbnet/sandwich.hpp"

namespace lbnet {

// Version stamp written into every JSON document. Readers accept any minor
// revision of the same major version and reject everything else.
inline constexpr const char* kFormatVersion = "1.0";

// On-disk network: the dense direct parameterization (gamma lives inside
// params) plus any convolutional layers, which serialize alongside but are
// realized through their own path.
struct ModelFile {
  Activation activation = Activation::Relu;
  DirectParams params;
  std::vector<ConvParams> conv;

  bool has_dense() const { return !params.layers.empty(); }
};

std::string model_to_json(const ModelFile& m);
ModelFile model_from_json(const std::string& text);
void save_model(const std::string& path, const ModelFile& m);
ModelFile load_model(const std::string& path);

// Explicit-weight container {W, b, Lambda} with the same framing.
std::string weights_to_json(const ExtractedWeights& ew);
ExtractedWeights weights_from_json(const std::string& text);
void save_weights(const std::string& path, const ExtractedWeights& ew);
ExtractedWeights load_weights(const std::string& path);

// Report documents emitted by the command-line tool.
std::string certificate_to_json(const CertificateReport& rep);
std::string lip_report_to_json(double gamma, const LipEstimate& est, double tightness,
                               const std::vector<LayerBound>& layers);

// True when the document's top-level keys look like a weights file rather
// than a model file (used to auto-detect what a path holds).
bool looks_like_weights(const std::string& text);

}  // namespace lbnet
