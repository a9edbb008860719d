#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gmrfrec/common.hpp"
#include "gmrfrec/dense.hpp"
#include "gmrfrec/preprocess.hpp"

namespace gmrfrec {

static_assert(std::endian::native == std::endian::little,
              "model payload is written as raw little-endian words");
static_assert(sizeof(double) == 8);

struct Model {
  std::vector<std::string> item_ids;
  PreprocessStats stats;
  WeightMatrix weights;
};

namespace detail {

// 17 significant digits survive a parse round trip for every double
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw data_error(std::string("model header: bad ") + what + " value '" + s + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw data_error(std::string("model header: bad ") + what + " value '" + s + "'");
  }
}

// reads "key value" and returns value, or fails naming the expected key
inline std::string header_field(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw data_error("model header: truncated before '" + key + "'");
  const auto sp = line.find(' ');
  if (sp == std::string::npos || line.substr(0, sp) != key) {
    throw data_error("model header: expected '" + key + "', got '" + line + "'");
  }
  return line.substr(sp + 1);
}

}  // namespace detail

// Layout: a line-oriented text header (version, solver metadata, item ID
// table) followed by a raw little-endian payload holding the per-item stats
// and the weight triplets. Triplets are (row, col, value) with row/col as
// u32 positions in the ID table, emitted column by column with rows
// ascending; the zero diagonal is omitted.
inline void save_model(const std::string& path, const Model& model) {
  const auto& w = model.weights;
  if (model.item_ids.size() != w.m) throw config_error("item ID table does not match weights");
  if (static_cast<std::size_t>(model.stats.mu.size()) != w.m) {
    throw config_error("stats do not match weights");
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot open model file for writing: " + path);

  out << "gmrfrec model 1\n";
  out << "solver " << solver_name(w.meta.solver) << "\n";
  out << "lambda " << detail::fmt_double(w.meta.lambda) << "\n";
  out << "alpha " << detail::fmt_double(w.meta.alpha) << "\n";
  out << "center " << (w.meta.center ? 1 : 0) << "\n";
  out << "r " << detail::fmt_double(w.meta.r) << "\n";
  out << "target_density " << detail::fmt_double(w.meta.target_density) << "\n";
  out << "cap " << w.meta.cap << "\n";
  out << "items " << w.m << "\n";
  out << "nnz " << w.nnz() << "\n";
  for (const std::string& id : model.item_ids) out << id << "\n";
  out << "payload\n";

  const auto m = static_cast<std::streamsize>(w.m);
  out.write(reinterpret_cast<const char*>(model.stats.mu.data()), m * 8);
  out.write(reinterpret_cast<const char*>(model.stats.stddev.data()), m * 8);
  out.write(reinterpret_cast<const char*>(model.stats.scale.data()), m * 8);

  for (Eigen::Index col = 0; col < w.B.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(w.B, col); it; ++it) {
      const auto row = static_cast<std::uint32_t>(it.row());
      const auto c = static_cast<std::uint32_t>(col);
      const double v = it.value();
      out.write(reinterpret_cast<const char*>(&row), 4);
      out.write(reinterpret_cast<const char*>(&c), 4);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
  out.flush();
  if (!out) throw data_error("write failed for model file: " + path);
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open model file: " + path);

  std::string magic;
  std::getline(in, magic);
  if (magic != "gmrfrec model 1") throw data_error("not a model file (bad magic): " + path);

  Model model;
  auto& meta = model.weights.meta;
  const std::string solver = detail::header_field(in, "solver");
  if (solver == solver_name(SolverKind::dense)) {
    meta.solver = SolverKind::dense;
  } else if (solver == solver_name(SolverKind::dense_mean_constrained)) {
    meta.solver = SolverKind::dense_mean_constrained;
  } else if (solver == solver_name(SolverKind::sparse)) {
    meta.solver = SolverKind::sparse;
  } else {
    throw data_error("model header: unknown solver '" + solver + "'");
  }
  meta.lambda = detail::parse_double(detail::header_field(in, "lambda"), "lambda");
  meta.alpha = detail::parse_double(detail::header_field(in, "alpha"), "alpha");
  meta.center = detail::parse_uint(detail::header_field(in, "center"), "center") != 0;
  meta.r = detail::parse_double(detail::header_field(in, "r"), "r");
  meta.target_density =
      detail::parse_double(detail::header_field(in, "target_density"), "target_density");
  meta.cap = static_cast<std::uint32_t>(detail::parse_uint(detail::header_field(in, "cap"), "cap"));
  const std::uint64_t m = detail::parse_uint(detail::header_field(in, "items"), "items");
  const std::uint64_t nnz = detail::parse_uint(detail::header_field(in, "nnz"), "nnz");

  model.item_ids.reserve(m);
  std::string line;
  for (std::uint64_t i = 0; i < m; ++i) {
    if (!std::getline(in, line)) throw data_error("model header: truncated item ID table");
    model.item_ids.push_back(line);
  }
  if (!std::getline(in, line) || line != "payload") {
    throw data_error("model header: missing payload marker");
  }

  model.stats.alpha = meta.alpha;
  model.stats.mu.resize(static_cast<Eigen::Index>(m));
  model.stats.stddev.resize(static_cast<Eigen::Index>(m));
  model.stats.scale.resize(static_cast<Eigen::Index>(m));
  const auto bytes = static_cast<std::streamsize>(m) * 8;
  in.read(reinterpret_cast<char*>(model.stats.mu.data()), bytes);
  in.read(reinterpret_cast<char*>(model.stats.stddev.data()), bytes);
  in.read(reinterpret_cast<char*>(model.stats.scale.data()), bytes);
  if (!in) throw data_error("model payload: truncated stats block");

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  for (std::uint64_t k = 0; k < nnz; ++k) {
    std::uint32_t row = 0, col = 0;
    double value = 0.0;
    in.read(reinterpret_cast<char*>(&row), 4);
    in.read(reinterpret_cast<char*>(&col), 4);
    in.read(reinterpret_cast<char*>(&value), 8);
    if (!in) throw data_error("model payload: truncated weight triplets");
    if (row >= m || col >= m) throw data_error("model payload: triplet index out of range");
    if (row == col) throw data_error("model payload: unexpected diagonal entry");
    trips.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col), value);
  }
  in.peek();
  if (!in.eof()) throw data_error("model payload: trailing bytes");

  model.weights.m = m;
  model.weights.B.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  model.weights.B.setFromTriplets(trips.begin(), trips.end());
  model.weights.B.makeCompressed();
  return model;
}

}  // namespace gmrfrec
