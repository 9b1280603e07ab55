#include "cdrive/ad/params.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cdrive::ad {

std::size_t ParamSet::add(const std::string& name, Matrix value, bool trainable) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  index_[name] = entries_.size();
  entries_.push_back({name, std::move(value), trainable});
  return entries_.size() - 1;
}

std::size_t ParamSet::index_of(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

void ParamSet::assign(const std::string& name, const Matrix& m) { assign(index_of(name), m); }

void ParamSet::assign(std::size_t i, const Matrix& m) {
  auto& e = entries_.at(i);
  if (m.rows() != e.value.rows() || m.cols() != e.value.cols())
    throw std::invalid_argument("shape mismatch assigning '" + e.name + "'");
  e.value = m;
}

void ParamSet::set_trainable_prefix(const std::string& prefix, bool t) {
  for (auto& e : entries_)
    if (e.name.rfind(prefix, 0) == 0) e.trainable = t;
}

std::uint64_t ParamSet::checksum(const std::function<bool(const std::string&)>& filter) const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& e : entries_) {
    if (filter && !filter(e.name)) continue;
    mix(e.name.data(), e.name.size());
    const std::int64_t shape[2] = {e.value.rows(), e.value.cols()};
    mix(shape, sizeof shape);
    mix(e.value.data(), sizeof(double) * e.value.size());
  }
  return h;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void accumulate(Gradients& dst, const Gradients& src, double scale) {
  for (const auto& [name, g] : src) {
    auto it = dst.find(name);
    if (it == dst.end())
      dst.emplace(name, g * scale);
    else
      it->second += g * scale;
  }
}

void write_params(std::ostream& out, const ParamSet& params) {
  out << "cdrive-params 1 " << params.size() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = params.entry(i);
    out << "array " << e.name << ' ' << e.value.rows() << ' ' << e.value.cols() << ' '
        << (e.trainable ? 1 : 0) << '\n';
    for (Eigen::Index k = 0; k < e.value.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%a", e.value.data()[k]);
      out << buf << ((k + 1) % 8 == 0 || k + 1 == e.value.size() ? '\n' : ' ');
    }
  }
}

void save_params(const ParamSet& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  write_params(out, params);
}

ParamSet read_params(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version >> count) || magic != "cdrive-params")
    throw std::runtime_error("not a cdrive parameter checkpoint");
  if (version != 1) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  ParamSet ps;
  for (std::size_t i = 0; i < count; ++i) {
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    int trainable = 0;
    if (!(in >> tag >> name >> rows >> cols >> trainable) || tag != "array")
      throw std::runtime_error("malformed checkpoint array header");
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      std::string tok;
      if (!(in >> tok)) throw std::runtime_error("truncated checkpoint array " + name);
      m.data()[k] = std::strtod(tok.c_str(), nullptr);
    }
    ps.add(name, std::move(m), trainable != 0);
  }
  return ps;
}

ParamSet load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return read_params(in);
}

}  // namespace cdrive::ad
