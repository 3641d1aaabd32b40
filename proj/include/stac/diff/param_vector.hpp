#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stac::diff {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Flat, ordered parameters of one player, with named segments
/// (e.g. "l0.w", "l0.b"). All gradients and updates operate on this layout.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::vector<double> data);
  ParamVector(std::vector<double> data, std::vector<Segment> layout);

  /// Zero vector carrying `layout`.
  static ParamVector zeros_like(const ParamVector& other);

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& data() const { return data_; }
  const std::vector<Segment>& layout() const { return layout_; }

  std::span<const double> segment(const std::string& name) const;
  std::span<double> segment(const std::string& name);

  /// Splits into one vector per segment, in layout order.
  std::vector<std::vector<double>> unpack() const;
  /// Inverse of unpack for a given layout.
  static ParamVector pack(const std::vector<std::vector<double>>& parts,
                          std::vector<Segment> layout);

  /// Concatenation; segment names of `b` are kept, offsets shifted.
  static ParamVector concat(const ParamVector& a, const ParamVector& b);

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.data_ == b.data_;
  }

 private:
  const Segment& find(const std::string& name) const;

  std::vector<double> data_;
  std::vector<Segment> layout_;
};

/// Builds a layout from (name, size) pairs laid out back to back.
std::vector<Segment> make_layout(const std::vector<std::pair<std::string, std::size_t>>& parts);

}  // namespace stac::diff
