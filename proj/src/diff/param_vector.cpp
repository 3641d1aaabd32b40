#include "stac/diff/param_vector.hpp"

#include <stdexcept>

namespace stac::diff {

ParamVector::ParamVector(std::vector<double> data)
    : data_(std::move(data)), layout_{Segment{"all", 0, data_.size()}} {}

ParamVector::ParamVector(std::vector<double> data, std::vector<Segment> layout)
    : data_(std::move(data)), layout_(std::move(layout)) {
  std::size_t total = 0;
  for (const auto& s : layout_) {
    if (s.offset != total) throw std::invalid_argument("ParamVector: segments must be back to back");
    total += s.size;
  }
  if (total != data_.size()) throw std::invalid_argument("ParamVector: layout does not cover data");
}

ParamVector ParamVector::zeros_like(const ParamVector& other) {
  return ParamVector(std::vector<double>(other.size(), 0.0), other.layout_);
}

const Segment& ParamVector::find(const std::string& name) const {
  for (const auto& s : layout_) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("ParamVector: no segment named " + name);
}

std::span<const double> ParamVector::segment(const std::string& name) const {
  const Segment& s = find(name);
  return std::span<const double>(data_).subspan(s.offset, s.size);
}

std::span<double> ParamVector::segment(const std::string& name) {
  const Segment& s = find(name);
  return std::span<double>(data_).subspan(s.offset, s.size);
}

std::vector<std::vector<double>> ParamVector::unpack() const {
  std::vector<std::vector<double>> parts;
  parts.reserve(layout_.size());
  for (const auto& s : layout_) {
    parts.emplace_back(data_.begin() + static_cast<std::ptrdiff_t>(s.offset),
                       data_.begin() + static_cast<std::ptrdiff_t>(s.offset + s.size));
  }
  return parts;
}

ParamVector ParamVector::pack(const std::vector<std::vector<double>>& parts,
                              std::vector<Segment> layout) {
  if (parts.size() != layout.size()) throw std::invalid_argument("pack: part count mismatch");
  std::vector<double> data;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].size() != layout[k].size) throw std::invalid_argument("pack: part size mismatch");
    data.insert(data.end(), parts[k].begin(), parts[k].end());
  }
  return ParamVector(std::move(data), std::move(layout));
}

ParamVector ParamVector::concat(const ParamVector& a, const ParamVector& b) {
  std::vector<double> data = a.data_;
  data.insert(data.end(), b.data_.begin(), b.data_.end());
  std::vector<Segment> layout = a.layout_;
  for (Segment s : b.layout_) {
    s.offset += a.size();
    layout.push_back(std::move(s));
  }
  return ParamVector(std::move(data), std::move(layout));
}

std::vector<Segment> make_layout(const std::vector<std::pair<std::string, std::size_t>>& parts) {
  std::vector<Segment> layout;
  std::size_t offset = 0;
  for (const auto& [name, size] : parts) {
    layout.push_back(Segment{name, offset, size});
    offset += size;
  }
  return layout;
}

}  // namespace stac::diff
