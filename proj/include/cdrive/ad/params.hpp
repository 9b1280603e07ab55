#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace cdrive::ad {

using Matrix = Eigen::MatrixXd;

/// Named parameter arrays with immutable shapes and a trainable flag each.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Matrix value;
    bool trainable = true;
  };

  /// Throws std::invalid_argument on a duplicate name.
  std::size_t add(const std::string& name, Matrix value, bool trainable = true);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t index_of(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }

  const Entry& entry(std::size_t i) const { return entries_[i]; }
  const Matrix& value(const std::string& name) const { return entries_[index_of(name)].value; }
  const Matrix& value(std::size_t i) const { return entries_[i].value; }
  /// Replaces the contents; the shape must match.
  void assign(const std::string& name, const Matrix& m);
  void assign(std::size_t i, const Matrix& m);
  /// In-place access to an array's values; the shape cannot change through it.
  Eigen::Map<Matrix> data(std::size_t i) {
    auto& v = entries_[i].value;
    return {v.data(), v.rows(), v.cols()};
  }

  bool trainable(std::size_t i) const { return entries_[i].trainable; }
  void set_trainable(std::size_t i, bool t) { entries_[i].trainable = t; }
  /// Sets the flag for every array whose name starts with `prefix`.
  void set_trainable_prefix(const std::string& prefix, bool t);

  /// FNV-1a over names, shapes and raw bytes of arrays selected by `filter`.
  std::uint64_t checksum(const std::function<bool(const std::string&)>& filter = {}) const;

  std::size_t scalar_count() const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Per-array gradients keyed by parameter name. Only trainable arrays appear.
using Gradients = std::map<std::string, Matrix>;

/// Adds `src` into `dst` (fixed key order).
void accumulate(Gradients& dst, const Gradients& src, double scale = 1.0);

// Checkpoint container, text format version 1:
//   cdrive-params 1 <count>
//   array <name> <rows> <cols> <trainable 0|1>
//   <rows*cols hexadecimal floats, column-major, whitespace separated>
void save_params(const ParamSet& params, const std::string& path);
void write_params(std::ostream& out, const ParamSet& params);
ParamSet load_params(const std::string& path);
ParamSet read_params(std::istream& in);

}  // namespace cdrive::ad
