#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mxl {

using cplx = std::complex<double>;

/// Minimal row-major complex n-d array used by the channel/pilot layers.
class CArray {
 public:
  CArray() = default;
  explicit CArray(std::vector<std::size_t> dims)
      : dims_(std::move(dims)),
        v_(std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>())) {}

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t size() const { return v_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t rank() const { return dims_.size(); }

  cplx* data() { return v_.data(); }
  const cplx* data() const { return v_.data(); }

  cplx& operator[](std::size_t i) { return v_[i]; }
  const cplx& operator[](std::size_t i) const { return v_[i]; }

  template <typename... Ix>
  cplx& at(Ix... ix) {
    return v_[offset({static_cast<std::size_t>(ix)...})];
  }
  template <typename... Ix>
  const cplx& at(Ix... ix) const {
    return v_[offset({static_cast<std::size_t>(ix)...})];
  }

  std::size_t offset(std::initializer_list<std::size_t> ix) const {
    if (ix.size() != dims_.size()) throw std::invalid_argument("CArray: index rank mismatch");
    std::size_t off = 0;
    auto d = dims_.begin();
    for (std::size_t i : ix) {
      if (i >= *d) throw std::out_of_range("CArray: index out of range");
      off = off * (*d) + i;
      ++d;
    }
    return off;
  }

  bool same_shape(const CArray& o) const { return dims_ == o.dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::vector<cplx> v_;
};

inline double power_sum(const CArray& a) {
  double p = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) p += std::norm(a[i]);
  return p;
}

/// NMSE between a truth/estimate pair, as a linear ratio.
inline double nmse_linear(const CArray& truth, const CArray& est) {
  if (!truth.same_shape(est)) throw std::invalid_argument("nmse: shape mismatch");
  double num = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) num += std::norm(truth[i] - est[i]);
  const double den = power_sum(truth);
  if (den <= 0.0) throw std::domain_error("nmse: zero-power truth");
  return num / den;
}

}  // namespace mxl
