#include "diagnet/tensor.hpp"

namespace diagnet {

std::string shape_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                     shape_string(t.shape()));
  }
}

Tensor concat(std::span<const Tensor* const> parts) {
  std::vector<double> out;
  for (const Tensor* p : parts) {
    if (p->rank() != 1) throw ShapeError("concat expects rank-1 tensors, got " + shape_string(p->shape()));
    out.insert(out.end(), p->data().begin(), p->data().end());
  }
  if (out.empty()) throw ShapeError("concat of nothing");
  const std::size_t n = out.size();
  return Tensor({n}, std::move(out));
}

}  // namespace diagnet
