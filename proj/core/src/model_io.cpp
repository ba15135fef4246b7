#include "lbnet/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lbnet {

namespace {

using json = nlohmann::json;

json mat_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix mat_from_json(const json& j, const std::string& what) {
  detail::require(j.is_array(), ErrorKind::Schema, what + ": expected an array of rows");
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return Matrix();
  detail::require(j[0].is_array(), ErrorKind::Schema, what + ": rows must be arrays");
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = j[i];
    detail::require(row.is_array() && static_cast<int>(row.size()) == cols, ErrorKind::Schema,
                    what + ": ragged rows");
    for (int c = 0; c < cols; ++c) {
      detail::require(row[c].is_number(), ErrorKind::Schema, what + ": entries must be numbers");
      m(i, c) = row[c].get<double>();
    }
  }
  return m;
}

// Column vectors are stored flat.
json vec_to_json(const Matrix& v) {
  json out = json::array();
  for (int i = 0; i < v.rows; ++i) out.push_back(v(i, 0));
  return out;
}

Matrix vec_from_json(const json& j, const std::string& what) {
  detail::require(j.is_array(), ErrorKind::Schema, what + ": expected an array");
  Matrix v(static_cast<int>(j.size()), 1);
  for (int i = 0; i < v.rows; ++i) {
    detail::require(j[i].is_number(), ErrorKind::Schema, what + ": entries must be numbers");
    v(i, 0) = j[i].get<double>();
  }
  return v;
}

json tens_to_json(const Tensor4& t) {
  json a = json::array();
  for (int i0 = 0; i0 < t.shape[0]; ++i0) {
    json b = json::array();
    for (int i1 = 0; i1 < t.shape[1]; ++i1) {
      json c = json::array();
      for (int i2 = 0; i2 < t.shape[2]; ++i2) {
        json d = json::array();
        for (int i3 = 0; i3 < t.shape[3]; ++i3) d.push_back(t(i0, i1, i2, i3));
        c.push_back(std::move(d));
      }
      b.push_back(std::move(c));
    }
    a.push_back(std::move(b));
  }
  return a;
}

Tensor4 tens_from_json(const json& j, const std::string& what) {
  const std::string bad = what + ": expected a 4-level nested array";
  detail::require(j.is_array() && !j.empty(), ErrorKind::Schema, bad);
  detail::require(j[0].is_array() && !j[0].empty(), ErrorKind::Schema, bad);
  detail::require(j[0][0].is_array() && !j[0][0].empty(), ErrorKind::Schema, bad);
  detail::require(j[0][0][0].is_array(), ErrorKind::Schema, bad);
  const int s0 = static_cast<int>(j.size());
  const int s1 = static_cast<int>(j[0].size());
  const int s2 = static_cast<int>(j[0][0].size());
  const int s3 = static_cast<int>(j[0][0][0].size());
  Tensor4 t(s0, s1, s2, s3);
  for (int a = 0; a < s0; ++a) {
    detail::require(j[a].is_array() && static_cast<int>(j[a].size()) == s1, ErrorKind::Schema,
                    bad);
    for (int b = 0; b < s1; ++b) {
      const json& jb = j[a][b];
      detail::require(jb.is_array() && static_cast<int>(jb.size()) == s2, ErrorKind::Schema, bad);
      for (int c = 0; c < s2; ++c) {
        const json& jc = jb[c];
        detail::require(jc.is_array() && static_cast<int>(jc.size()) == s3, ErrorKind::Schema,
                        bad);
        for (int d = 0; d < s3; ++d) {
          detail::require(jc[d].is_number(), ErrorKind::Schema,
                          what + ": entries must be numbers");
          t(a, b, c, d) = jc[d].get<double>();
        }
      }
    }
  }
  return t;
}

json parse(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  detail::require(!doc.is_discarded(), ErrorKind::Schema, "not valid JSON");
  detail::require(doc.is_object(), ErrorKind::Schema, "top level must be an object");
  return doc;
}

void check_version(const json& doc) {
  detail::require(doc.contains("format_version") && doc["format_version"].is_string(),
                  ErrorKind::Schema, "missing format_version");
  const std::string v = doc["format_version"].get<std::string>();
  const std::string mine(kFormatVersion);
  const std::string major = v.substr(0, v.find('.'));
  const std::string my_major = mine.substr(0, mine.find('.'));
  detail::require(major == my_major, ErrorKind::Schema,
                  "unsupported format_version " + v + " (this build reads " + my_major + ".x)");
}

const json& field(const json& doc, const char* key, const std::string& where) {
  detail::require(doc.contains(key), ErrorKind::Schema, where + ": missing key '" + key + "'");
  return doc.at(key);
}

double number_field(const json& doc, const char* key, const std::string& where) {
  const json& j = field(doc, key, where);
  detail::require(j.is_number(), ErrorKind::Schema, where + ": '" + key + "' must be a number");
  return j.get<double>();
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  detail::require(f.good(), ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  detail::require(!f.bad(), ErrorKind::Io, "read failed for " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  detail::require(f.good(), ErrorKind::Io, "cannot open " + path + " for writing");
  f << text << '\n';
  f.flush();
  detail::require(f.good(), ErrorKind::Io, "write failed for " + path);
}

}  // namespace

std::string model_to_json(const ModelFile& m) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["gamma"] = m.params.gamma;
  doc["activation"] = to_string(m.activation);
  json layers = json::array();
  const int last = static_cast<int>(m.params.layers.size()) - 1;
  for (int k = 0; k <= last; ++k) {
    const LayerParams& l = m.params.layers[k];
    json jl;
    jl["X"] = mat_to_json(l.x);
    jl["Y"] = mat_to_json(l.y);
    jl["b"] = vec_to_json(l.b);
    jl["g"] = l.g;
    jl["h"] = l.h;
    if (k < last) jl["d"] = vec_to_json(m.params.hidden_scales[k]);
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  if (!m.conv.empty()) {
    json conv = json::array();
    for (const ConvParams& c : m.conv) {
      json jc;
      jc["P"] = tens_to_json(c.p);
      jc["d"] = vec_to_json(c.d);
      jc["b"] = vec_to_json(c.b);
      conv.push_back(std::move(jc));
    }
    doc["conv"] = std::move(conv);
  }
  return doc.dump(2);
}

ModelFile model_from_json(const std::string& text) {
  const json doc = parse(text);
  check_version(doc);
  ModelFile m;
  m.params.gamma = number_field(doc, "gamma", "model");
  const json& jact = field(doc, "activation", "model");
  detail::require(jact.is_string(), ErrorKind::Schema, "model: activation must be a string");
  m.activation = activation_from_string(jact.get<std::string>());

  const json& jlayers = field(doc, "layers", "model");
  detail::require(jlayers.is_array(), ErrorKind::Schema, "model: layers must be an array");
  const int count = static_cast<int>(jlayers.size());
  for (int k = 0; k < count; ++k) {
    const json& jl = jlayers[k];
    detail::require(jl.is_object(), ErrorKind::Schema, "model: each layer must be an object");
    const std::string where = "layer " + std::to_string(k);
    LayerParams l;
    l.x = mat_from_json(field(jl, "X", where), where + ".X");
    l.y = mat_from_json(field(jl, "Y", where), where + ".Y");
    l.b = vec_from_json(field(jl, "b", where), where + ".b");
    l.g = number_field(jl, "g", where);
    l.h = number_field(jl, "h", where);
    const bool hidden = k < count - 1;
    detail::require(jl.contains("d") == hidden, ErrorKind::Schema,
                    where + (hidden ? ": hidden layers need 'd'" : ": output layer carries no 'd'"));
    if (hidden) m.params.hidden_scales.push_back(vec_from_json(jl["d"], where + ".d"));
    m.params.layers.push_back(std::move(l));
  }

  if (doc.contains("conv")) {
    const json& jconv = doc["conv"];
    detail::require(jconv.is_array(), ErrorKind::Schema, "model: conv must be an array");
    for (size_t k = 0; k < jconv.size(); ++k) {
      const std::string where = "conv layer " + std::to_string(k);
      const json& jc = jconv[k];
      detail::require(jc.is_object(), ErrorKind::Schema, where + " must be an object");
      ConvParams c;
      c.p = tens_from_json(field(jc, "P", where), where + ".P");
      c.d = vec_from_json(field(jc, "d", where), where + ".d");
      c.b = vec_from_json(field(jc, "b", where), where + ".b");
      m.conv.push_back(std::move(c));
    }
  }
  return m;
}

void save_model(const std::string& path, const ModelFile& m) {
  write_file(path, model_to_json(m));
}

ModelFile load_model(const std::string& path) { return model_from_json(read_file(path)); }

std::string weights_to_json(const ExtractedWeights& ew) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["gamma"] = ew.gamma;
  json w = json::array(), b = json::array(), lambda = json::array();
  for (const Matrix& m : ew.w) w.push_back(mat_to_json(m));
  for (const Matrix& m : ew.b) b.push_back(vec_to_json(m));
  for (const Matrix& m : ew.lambda) lambda.push_back(vec_to_json(m));
  doc["W"] = std::move(w);
  doc["b"] = std::move(b);
  doc["Lambda"] = std::move(lambda);
  return doc.dump(2);
}

ExtractedWeights weights_from_json(const std::string& text) {
  const json doc = parse(text);
  check_version(doc);
  ExtractedWeights ew;
  ew.gamma = number_field(doc, "gamma", "weights");
  const json& jw = field(doc, "W", "weights");
  const json& jb = field(doc, "b", "weights");
  const json& jl = field(doc, "Lambda", "weights");
  detail::require(jw.is_array() && jb.is_array() && jl.is_array(), ErrorKind::Schema,
                  "weights: W, b, Lambda must be arrays");
  detail::require(jw.size() == jb.size() && !jw.empty(), ErrorKind::Schema,
                  "weights: need matching non-empty W and b lists");
  detail::require(jl.size() + 1 == jw.size(), ErrorKind::Schema,
                  "weights: Lambda must have one entry per hidden layer");
  for (size_t k = 0; k < jw.size(); ++k) {
    const std::string where = "weights[" + std::to_string(k) + "]";
    ew.w.push_back(mat_from_json(jw[k], where + ".W"));
    ew.b.push_back(vec_from_json(jb[k], where + ".b"));
    if (k < jl.size()) ew.lambda.push_back(vec_from_json(jl[k], where + ".Lambda"));
  }
  return ew;
}

void save_weights(const std::string& path, const ExtractedWeights& ew) {
  write_file(path, weights_to_json(ew));
}

ExtractedWeights load_weights(const std::string& path) {
  return weights_from_json(read_file(path));
}

std::string certificate_to_json(const CertificateReport& rep) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["gamma"] = rep.gamma;
  doc["h_min_eig"] = rep.h_min_eig;
  doc["psd"] = rep.psd;
  if (rep.has_factor_details) {
    json chordal;
    chordal["min_eigs"] = rep.chordal_min_eigs;
    chordal["residual"] = rep.chordal_residual;
    doc["chordal"] = std::move(chordal);
    json weighted;
    weighted["pinv_form"] = rep.weighted.pinv_form;
    weighted["transpose_form"] = rep.weighted.transpose_form;
    weighted["product"] = rep.weighted.product;
    weighted["naive"] = rep.weighted.naive;
    weighted["naive_product"] = rep.weighted.naive_product;
    doc["weighted"] = std::move(weighted);
  }
  return doc.dump(2);
}

std::string lip_report_to_json(double gamma, const LipEstimate& est, double tightness,
                               const std::vector<LayerBound>& layers) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["gamma"] = gamma;
  doc["lower_bound"] = est.lower;
  doc["tightness"] = tightness;
  doc["nan_restarts"] = est.nan_restarts;
  if (!layers.empty()) {
    json rows = json::array();
    for (const LayerBound& l : layers) {
      json row;
      row["layer"] = l.layer;
      row["certified"] = l.certified;
      row["observed"] = l.observed;
      rows.push_back(std::move(row));
    }
    doc["per_layer"] = std::move(rows);
  }
  return doc.dump(2);
}

bool looks_like_weights(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return false;
  return doc.contains("W") && !doc.contains("layers");
}

}  // namespace lbnet
