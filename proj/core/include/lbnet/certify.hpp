#pragma once

#include <vector>

#include "lbnet/sandwich.hpp"

namespace lbnet {

// The block-tridiagonal certificate matrix for explicit weights:
// diagonal blocks (gamma I, 2 Lambda_0, ..., 2 Lambda_{L-1}, gamma I),
// sub-diagonal blocks -Lambda_k W_k (and -W_L on the last one). The network
// is gamma-Lipschitz whenever H is positive semidefinite.
Matrix assemble_H(const std::vector<Matrix>& w, const std::vector<Matrix>& lambda,
                  double gamma);
Matrix assemble_H(const ExtractedWeights& ew);

// The certificate of a realized model splits into one small PSD block per
// layer; the blocks overlap on the hidden variables and sum back to H
// exactly. Block k couples variables (z_k, z_{k+1}).
std::vector<Matrix> chordal_blocks(const RealizedModel& m);

// Per-layer spectral bounds in the scaled coordinates where every hidden
// factor is a contraction. Two variants are computed: the pseudoinverse
// form (normative, provably <= 1 on interior layers) and the transpose
// form; the product of the pinv-form bounds is <= gamma. naive holds the
// unscaled |W_k| for contrast.
struct WeightedBounds {
  std::vector<double> pinv_form;
  std::vector<double> transpose_form;
  double product = 1.0;  // product of pinv_form entries
  std::vector<double> naive;
  double naive_product = 1.0;
};
WeightedBounds weighted_spectral_report(const RealizedModel& m);

struct CertificateReport {
  double gamma = 0.0;
  double h_min_eig = 0.0;
  bool psd = false;  // h_min_eig >= -1e-8
  // populated only when the model's factors are available
  bool has_factor_details = false;
  std::vector<double> chordal_min_eigs;
  double chordal_residual = 0.0;  // max |sum of embedded blocks - H|
  WeightedBounds weighted;
};

CertificateReport check_certificate(const RealizedModel& m);
// Weights-only variant (e.g. for an exported network): only the H test.
CertificateReport check_certificate(const ExtractedWeights& ew);

}  // namespace lbnet
