#include "diagnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace diagnet {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

double check_gradient(const std::function<double()>& loss, std::span<double> values,
                      std::span<const double> analytic, double eps) {
  double worst = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + eps;
    const double up = loss();
    values[i] = saved - eps;
    const double down = loss();
    values[i] = saved;
    const double numeric = (up - down) / (2 * eps);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  return worst;
}

GradCheckReport grad_check(Sequential& net, const Tensor& input, std::size_t target, double eps) {
  net.zero_grad();
  const Tensor logits = net.forward(input);
  const LossResult lr = softmax_cross_entropy(logits, target);
  const Tensor grad_input = net.backward(lr.grad);

  Tensor x = input;
  auto loss = [&] { return softmax_cross_entropy(net.forward(x), target).loss; };

  GradCheckReport report;
  for (Param* p : net.params()) {
    const std::vector<double> analytic(p->grad.data().begin(), p->grad.data().end());
    report.max_param_error =
        std::max(report.max_param_error, check_gradient(loss, p->value.data(), analytic, eps));
  }
  const std::vector<double> analytic(grad_input.data().begin(), grad_input.data().end());
  report.max_input_error = check_gradient(loss, x.data(), analytic, eps);
  return report;
}

}  // namespace diagnet
