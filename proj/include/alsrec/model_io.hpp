#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "alsrec/dataset.hpp"
#include "alsrec/error.hpp"
#include "alsrec/factorization.hpp"

namespace alsrec {

// Binary model format, fixed byte-for-byte:
//   magic "ALSREC1\n"
//   u64le company count C, u64le investor count I, u64le factor count f
//   f64le lambda, u64le seed
//   C*f f64le X row-major, I*f f64le Y row-major
//   C company IDs, then I investor IDs, each u64le length + UTF-8 bytes,
//   in index order.

namespace detail {

inline constexpr char kModelMagic[8] = {'A', 'L', 'S', 'R', 'E', 'C', '1', '\n'};

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw ParseError("model file: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void put_string(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
  const std::uint64_t len = get_u64(is);
  if (len > (1ull << 20)) throw ParseError("model file: unreasonable string length");
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw ParseError("model file: truncated");
  return s;
}

}  // namespace detail

// A model as persisted: factors plus the interned ID tables it was trained
// against. Training bookkeeping (iterations, loss trace) is not persisted.
struct SavedModel {
  DenseMatrix X;  // company factors
  DenseMatrix Y;  // investor factors
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> company_ids;
  std::vector<std::string> investor_ids;

  std::size_t factors() const { return X.cols(); }
};

inline void save_model(std::ostream& os, const FactorModel& model, const InteractionDataset& d) {
  if (model.X.rows() != d.company_count() || model.Y.rows() != d.investor_count())
    throw ShapeError("save_model: model does not match the dataset's entity counts");
  os.write(detail::kModelMagic, 8);
  detail::put_u64(os, model.X.rows());
  detail::put_u64(os, model.Y.rows());
  detail::put_u64(os, model.X.cols());
  detail::put_f64(os, model.config.lambda);
  detail::put_u64(os, model.config.seed);
  for (double v : model.X.values()) detail::put_f64(os, v);
  for (double v : model.Y.values()) detail::put_f64(os, v);
  for (const std::string& id : d.company_ids()) detail::put_string(os, id);
  for (const std::string& id : d.investor_ids()) detail::put_string(os, id);
  if (!os) throw std::runtime_error("save_model: write failed");
}

inline void save_model_file(const std::string& path, const FactorModel& model,
                            const InteractionDataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
  save_model(out, model, d);
  out.flush();
  if (!out) throw std::runtime_error("failed writing model file: " + path);
}

inline SavedModel load_model(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kModelMagic, 8) != 0)
    throw ParseError("model file: bad magic bytes");
  const std::uint64_t companies = detail::get_u64(is);
  const std::uint64_t investors = detail::get_u64(is);
  const std::uint64_t factors = detail::get_u64(is);
  if (companies == 0 || investors == 0 || factors == 0)
    throw ParseError("model file: zero dimension");
  if (companies > std::numeric_limits<Index>::max() || investors > std::numeric_limits<Index>::max())
    throw ParseError("model file: entity count out of range");
  SavedModel m;
  m.lambda = detail::get_f64(is);
  m.seed = detail::get_u64(is);
  m.X = DenseMatrix(companies, factors);
  m.Y = DenseMatrix(investors, factors);
  for (std::size_t i = 0; i < companies * factors; ++i) m.X.data()[i] = detail::get_f64(is);
  for (std::size_t i = 0; i < investors * factors; ++i) m.Y.data()[i] = detail::get_f64(is);
  if (!m.X.all_finite() || !m.Y.all_finite())
    throw ParseError("model file: non-finite factor entry");
  m.company_ids.reserve(companies);
  for (std::uint64_t c = 0; c < companies; ++c) m.company_ids.push_back(detail::get_string(is));
  m.investor_ids.reserve(investors);
  for (std::uint64_t i = 0; i < investors; ++i) m.investor_ids.push_back(detail::get_string(is));
  return m;
}

inline SavedModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  try {
    return load_model(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace alsrec
