#ifndef LFSR_TENSOR_HPP
#define LFSR_TENSOR_HPP

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lfsr {

using Index = Eigen::Index;

/// Raised for contract violations that are not plain bounds errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using Image = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Shape4 = std::array<Index, 4>;

inline std::string to_string(const Shape4& s) {
  std::ostringstream os;
  os << "(" << s[0] << "," << s[1] << "," << s[2] << "," << s[3] << ")";
  return os.str();
}

/// Dense 4D array in row-major (outermost-first) order.
///
/// Network code reads the axes as (batch, channel, row, col); a light field
/// stores (angular row m, angular col n, y, x) in the same container.
template <typename Scalar_>
class Tensor4 {
 public:
  using Scalar = Scalar_;
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using PlaneMap = Eigen::Map<Image<Scalar>>;
  using ConstPlaneMap = Eigen::Map<const Image<Scalar>>;

  Tensor4() : dims_{0, 0, 0, 0} {}
  Tensor4(Index d0, Index d1, Index d2, Index d3)
      : dims_{d0, d1, d2, d3}, data_(Storage::Zero(d0 * d1 * d2 * d3)) {
    if (d0 < 0 || d1 < 0 || d2 < 0 || d3 < 0) throw Error("negative tensor dimension");
  }
  explicit Tensor4(const Shape4& s) : Tensor4(s[0], s[1], s[2], s[3]) {}

  static Tensor4 Constant(const Shape4& s, Scalar v) {
    Tensor4 t(s);
    t.data_.setConstant(v);
    return t;
  }

  const Shape4& shape() const { return dims_; }
  Index dim(int axis) const { return dims_[static_cast<std::size_t>(axis)]; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  Index offset(Index i, Index j, Index k, Index l) const {
    return ((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l;
  }
  Scalar& operator()(Index i, Index j, Index k, Index l) { return data_[offset(i, j, k, l)]; }
  Scalar operator()(Index i, Index j, Index k, Index l) const { return data_[offset(i, j, k, l)]; }

  /// (dim2 x dim3) plane at leading indices (i, j).
  PlaneMap plane(Index i, Index j) { return PlaneMap(data() + offset(i, j, 0, 0), dims_[2], dims_[3]); }
  ConstPlaneMap plane(Index i, Index j) const {
    return ConstPlaneMap(data() + offset(i, j, 0, 0), dims_[2], dims_[3]);
  }

  /// Same values, new shape with equal element count.
  Tensor4 reshaped(const Shape4& s) const {
    if (s[0] * s[1] * s[2] * s[3] != size())
      throw Error("cannot reshape " + to_string(dims_) + " to " + to_string(s));
    Tensor4 t;
    t.dims_ = s;
    t.data_ = data_;
    return t;
  }

  template <typename Other>
  Tensor4<Other> cast() const {
    Tensor4<Other> t(dims_);
    t.array() = data_.template cast<Other>();
    return t;
  }

  void set_zero() { data_.setZero(); }

 private:
  Shape4 dims_;
  Storage data_;
};

template <typename Scalar>
bool same_shape(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  return a.shape() == b.shape();
}

template <typename Scalar>
void require_same_shape(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b, const char* what) {
  if (!same_shape(a, b))
    throw Error(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                to_string(b.shape()));
}

}  // namespace lfsr

#endif  // LFSR_TENSOR_HPP
