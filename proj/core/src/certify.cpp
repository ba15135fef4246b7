#include "lbnet/certify.hpp"

#include <cmath>

#include "lbnet/linalg.hpp"

namespace lbnet {

namespace {

constexpr double kPsdSlack = 1e-8;

std::vector<int> block_widths(const std::vector<Matrix>& w) {
  detail::require(!w.empty(), ErrorKind::Dimension, "assemble_H: no weights");
  std::vector<int> n;
  n.push_back(w.front().cols);
  for (size_t k = 0; k < w.size(); ++k) {
    detail::require(w[k].cols == n.back(), ErrorKind::Dimension,
                    "assemble_H: weight widths do not chain");
    n.push_back(w[k].rows);
  }
  return n;
}

Matrix scaled_rows(const Matrix& lam, const Matrix& w) {
  Matrix out = w;
  for (int i = 0; i < w.rows; ++i) {
    const double s = lam(i, 0);
    for (int j = 0; j < w.cols; ++j) out(i, j) *= s;
  }
  return out;
}

}  // namespace

Matrix assemble_H(const std::vector<Matrix>& w, const std::vector<Matrix>& lambda,
                  double gamma) {
  detail::require(gamma > 0.0 && std::isfinite(gamma), ErrorKind::Domain,
                  "assemble_H: gamma must be positive");
  const size_t hidden = w.size() - 1;
  detail::require(lambda.size() == hidden, ErrorKind::Dimension,
                  "assemble_H: need one multiplier per hidden layer");
  const auto n = block_widths(w);
  for (size_t k = 0; k < hidden; ++k) {
    detail::require(lambda[k].cols == 1 && lambda[k].rows == n[k + 1], ErrorKind::Dimension,
                    "assemble_H: multiplier size mismatch");
    for (double v : lambda[k].data)
      detail::require(v > 0.0 && std::isfinite(v), ErrorKind::Domain,
                      "assemble_H: multipliers must be strictly positive");
  }

  std::vector<int> offset(n.size() + 1, 0);
  for (size_t i = 0; i < n.size(); ++i) offset[i + 1] = offset[i] + n[i];
  Matrix h = Matrix::zeros(offset.back(), offset.back());

  for (int i = 0; i < n.front(); ++i) h(i, i) = gamma;
  for (size_t k = 0; k < hidden; ++k)
    for (int i = 0; i < n[k + 1]; ++i)
      h(offset[k + 1] + i, offset[k + 1] + i) = 2.0 * lambda[k](i, 0);
  for (int i = 0; i < n.back(); ++i)
    h(offset[n.size() - 1] + i, offset[n.size() - 1] + i) = gamma;

  for (size_t k = 0; k < w.size(); ++k) {
    const Matrix what = (k < hidden) ? scaled_rows(lambda[k], w[k]) : w[k];
    for (int i = 0; i < what.rows; ++i)
      for (int j = 0; j < what.cols; ++j) {
        h(offset[k + 1] + i, offset[k] + j) = -what(i, j);
        h(offset[k] + j, offset[k + 1] + i) = -what(i, j);
      }
  }
  return h;
}

Matrix assemble_H(const ExtractedWeights& ew) {
  return assemble_H(ew.w, ew.lambda, ew.gamma);
}

std::vector<Matrix> chordal_blocks(const RealizedModel& m) {
  const int last = m.depth();
  const double gamma = m.gamma;
  std::vector<Matrix> blocks;

  if (last == 0) {
    // no hidden variables: the certificate itself is the single block
    //   [ gamma I, -W^T; -W, gamma I ]
    const Matrix w0 = extract_weights(m).w[0];
    const int p = w0.cols, q = w0.rows;
    Matrix h(p + q, p + q);
    for (int i = 0; i < p; ++i) h(i, i) = gamma;
    for (int i = 0; i < q; ++i) h(p + i, p + i) = gamma;
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < p; ++j) {
        h(p + i, j) = -w0(i, j);
        h(j, p + i) = -w0(i, j);
      }
    blocks.push_back(std::move(h));
    return blocks;
  }

  const double root_2g = std::sqrt(2.0 * gamma);
  auto psi_a = [&](int k) {  // Psi_k A_k, rows scaled
    return scaled_rows(m.layers[k].psi, m.layers[k].factors.a);
  };

  for (int k = 0; k <= last; ++k) {
    Matrix top_left, coupling, bottom_right;  // coupling sits below the diagonal
    if (k == 0) {
      const Matrix psi_b = scaled_rows(m.layers[0].psi, m.layers[0].factors.b);
      const int p = psi_b.cols, q = psi_b.rows;
      top_left = Matrix::zeros(p, p);
      for (int i = 0; i < p; ++i) top_left(i, i) = gamma;
      coupling = -root_2g * psi_b;
      const Matrix pa = psi_a(0);
      Matrix gram = matmul(pa, transpose(pa));
      bottom_right = Matrix::zeros(q, q);
      for (int i = 0; i < q; ++i) {
        const double d = m.layers[0].psi(i, 0);
        bottom_right(i, i) = 2.0 * d * d;
      }
      bottom_right = bottom_right - 2.0 * gram;
    } else if (k < last) {
      const Matrix pa_prev = psi_a(k - 1);
      const Matrix psi_b = scaled_rows(m.layers[k].psi, m.layers[k].factors.b);
      top_left = 2.0 * matmul(pa_prev, transpose(pa_prev));
      coupling = -2.0 * matmul(psi_b, transpose(pa_prev));
      const Matrix pa = psi_a(k);
      Matrix gram = matmul(pa, transpose(pa));
      bottom_right = Matrix::zeros(psi_b.rows, psi_b.rows);
      for (int i = 0; i < psi_b.rows; ++i) {
        const double d = m.layers[k].psi(i, 0);
        bottom_right(i, i) = 2.0 * d * d;
      }
      bottom_right = bottom_right - 2.0 * gram;
    } else {
      const Matrix pa_prev = psi_a(last - 1);
      top_left = 2.0 * matmul(pa_prev, transpose(pa_prev));
      coupling = -root_2g * matmul(m.layers[last].factors.b, transpose(pa_prev));
      const int q = m.layers[last].factors.b.rows;
      bottom_right = Matrix::zeros(q, q);
      for (int i = 0; i < q; ++i) bottom_right(i, i) = gamma;
    }

    Matrix h(top_left.rows + bottom_right.rows, top_left.rows + bottom_right.rows);
    set_block(h, 0, 0, top_left);
    set_block(h, top_left.rows, top_left.rows, bottom_right);
    set_block(h, top_left.rows, 0, coupling);
    set_block(h, 0, top_left.rows, transpose(coupling));
    blocks.push_back(std::move(h));
  }
  return blocks;
}

namespace {

// Largest singular value via the Jacobi factorization. The report has no
// error channel, and trained weights tend to pile singular values right at
// the top, which stalls plain power iteration; the factorization always
// terminates.
double top_singular_value(const Matrix& m) {
  if (m.empty()) return 0.0;
  const Svd f = svd(m);
  return f.sigma.empty() ? 0.0 : f.sigma.front();
}

}  // namespace

WeightedBounds weighted_spectral_report(const RealizedModel& m) {
  const ExtractedWeights ew = extract_weights(m);
  const int last = m.depth();
  WeightedBounds out;

  for (const auto& w : ew.w) out.naive.push_back(top_singular_value(w));
  out.naive_product = 1.0;
  for (double v : out.naive) out.naive_product *= v;

  if (last == 0) {
    out.pinv_form = out.naive;
    out.transpose_form = out.naive;
    out.product = out.naive_product;
    return out;
  }

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int k = 0; k <= last; ++k) {
    // scaled weight: Psi_k W_k Psi_{k-1}^{-1}, boundaries folded in already
    Matrix t = ew.w[k];
    if (k < last) t = scaled_rows(m.layers[k].psi, t);
    if (k > 0) {
      const Matrix& prev = m.layers[k - 1].psi;
      for (int j = 0; j < t.cols; ++j) {
        const double s = 1.0 / prev(j, 0);
        for (int i = 0; i < t.rows; ++i) t(i, j) *= s;
      }
    }
    if (k > 0) t = matmul(t, pinv(transpose(m.layers[k - 1].factors.a)));

    double bp, bt;
    if (k == 0) {
      bp = inv_sqrt2 * top_singular_value(matmul(pinv(m.layers[0].factors.b), t));
      bt = inv_sqrt2 * top_singular_value(matmul(transpose(m.layers[0].factors.b), t));
    } else if (k < last) {
      bp = 0.5 * top_singular_value(matmul(pinv(m.layers[k].factors.b), t));
      bt = 0.5 * top_singular_value(matmul(transpose(m.layers[k].factors.b), t));
    } else {
      bp = inv_sqrt2 * top_singular_value(t);
      bt = bp;
    }
    out.pinv_form.push_back(bp);
    out.transpose_form.push_back(bt);
  }
  out.product = 1.0;
  for (double v : out.pinv_form) out.product *= v;
  return out;
}

CertificateReport check_certificate(const RealizedModel& m) {
  CertificateReport r;
  const ExtractedWeights ew = extract_weights(m);
  const Matrix h = assemble_H(ew);
  r.gamma = m.gamma;
  r.h_min_eig = min_eig_sym(h);
  r.psd = r.h_min_eig >= -kPsdSlack;
  r.has_factor_details = true;

  const auto blocks = chordal_blocks(m);
  Matrix sum = Matrix::zeros(h.rows, h.cols);
  int off = 0;
  std::vector<int> widths;
  widths.push_back(m.input_dim());
  for (int k = 0; k < m.depth(); ++k) widths.push_back(m.layers[k].psi.rows);
  widths.push_back(m.output_dim());
  for (size_t k = 0; k < blocks.size(); ++k) {
    r.chordal_min_eigs.push_back(min_eig_sym(blocks[k]));
    for (int i = 0; i < blocks[k].rows; ++i)
      for (int j = 0; j < blocks[k].cols; ++j) sum(off + i, off + j) += blocks[k](i, j);
    off += widths[k];
  }
  r.chordal_residual = max_abs(sum - h);
  r.weighted = weighted_spectral_report(m);
  return r;
}

CertificateReport check_certificate(const ExtractedWeights& ew) {
  CertificateReport r;
  const Matrix h = assemble_H(ew);
  r.gamma = ew.gamma;
  r.h_min_eig = min_eig_sym(h);
  r.psd = r.h_min_eig >= -kPsdSlack;
  r.has_factor_details = false;
  for (const auto& w : ew.w) r.weighted.naive.push_back(top_singular_value(w));
  r.weighted.naive_product = 1.0;
  for (double v : r.weighted.naive) r.weighted.naive_product *= v;
  return r;
}

}  // namespace lbnet
