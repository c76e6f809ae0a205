#include "sifter/optim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "sifter/error.hpp"

namespace sifter {
namespace {

void check_inputs(const TensorRefs& params, const TensorRefs& grads, AdamState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i].tensor, *grads[i].tensor, params[i].name.c_str());
    if (!grads[i].tensor->all_finite()) {
      throw NumericError("non-finite gradient for parameter '" + params[i].name + "'");
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      Tensor zeros = *p.tensor;
      zeros.fill(0.0);
      state.m.push_back(zeros);
      state.v.push_back(zeros);
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("optimizer state tracks " + std::to_string(state.m.size()) +
                     " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(state.m[i], *params[i].tensor, params[i].name.c_str());
  }
}

void update(const TensorRefs& params, const TensorRefs& grads, AdamState& state,
            double decay) {
  check_inputs(params, grads, state);
  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k].tensor;
    const Tensor& g = *grads[k].tensor;
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      const double before = p[i];
      p[i] = before - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
      if (decay != 0.0) {
        p[i] -= c.learning_rate * decay * before;
      }
    }
  }
}

}  // namespace

void adam_step(const TensorRefs& params, const TensorRefs& grads, AdamState& state) {
  update(params, grads, state, 0.0);
}

void adamw_step(const TensorRefs& params, const TensorRefs& grads, AdamState& state) {
  update(params, grads, state, state.config.weight_decay);
}

void round_to_single(const TensorRefs& params) {
  for (const auto& p : params) {
    for (double& x : p.tensor->data()) x = static_cast<double>(static_cast<float>(x));
  }
}

L2Result l2_penalty(const TensorRefs& params, double lambda) {
  if (!(lambda >= 0.0)) {
    throw ValidationError("L2 strength must be nonnegative, got " + std::to_string(lambda));
  }
  L2Result out;
  for (const auto& p : params) {
    out.penalty += lambda * sum_squares(*p.tensor);
    out.grads.push_back(scale(*p.tensor, 2.0 * lambda));
  }
  return out;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

GradReport gradcheck(const std::function<double()>& loss, const TensorRefs& params,
                     const TensorRefs& analytic, const GradcheckOptions& opts) {
  if (params.size() != analytic.size()) {
    throw ShapeError("gradcheck: parameter and gradient lists differ in length");
  }
  GradReport report;
  report.threshold = opts.threshold;
  Rng sampler(opts.seed);

  auto evaluate = [&loss](const std::string& name) {
    const double value = loss();
    if (!std::isfinite(value)) {
      throw NumericError("gradcheck: loss is not finite while perturbing '" + name + "'");
    }
    return value;
  };
  evaluate("<base>");

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& theta = *params[k].tensor;
    const Tensor& grad = *analytic[k].tensor;
    require_same_shape(theta, grad, params[k].name.c_str());

    std::vector<std::size_t> coords(theta.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > opts.max_coords) {
      Rng pick = sampler.fork(k);
      pick.shuffle(coords);
      coords.resize(opts.max_coords);
      std::sort(coords.begin(), coords.end());
    }

    GradEntry entry;
    entry.name = params[k].name;
    for (std::size_t idx : coords) {
      const double saved = theta[idx];
      theta[idx] = saved + opts.step;
      const double plus = evaluate(entry.name);
      theta[idx] = saved - opts.step;
      const double minus = evaluate(entry.name);
      theta[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * opts.step);
      const double err = relative_error(grad[idx], numeric);
      ++entry.checked;
      if (err > entry.max_rel_error || entry.checked == 1) {
        entry.max_rel_error = err;
        entry.worst_index = idx;
        entry.worst_analytic = grad[idx];
        entry.worst_numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(entry);
  }
  report.passed = report.max_rel_error < opts.threshold;
  return report;
}

void GradReport::print_table(std::ostream& out) const {
  std::size_t width = 9;
  for (const auto& e : entries) width = std::max(width, e.name.size());
  std::ostringstream text;
  text << std::left << std::setw(static_cast<int>(width)) << "parameter"
       << "  " << std::right << std::setw(7) << "coords"
       << "  " << std::setw(14) << "max_rel_error"
       << "  " << std::setw(14) << "analytic"
       << "  " << std::setw(14) << "numeric" << "\n";
  text << std::scientific << std::setprecision(4);
  for (const auto& e : entries) {
    text << std::left << std::setw(static_cast<int>(width)) << e.name << "  " << std::right
         << std::setw(7) << e.checked << "  " << std::setw(14) << e.max_rel_error << "  "
         << std::setw(14) << e.worst_analytic << "  " << std::setw(14) << e.worst_numeric
         << "\n";
  }
  text << "max relative error " << max_rel_error << " (threshold " << threshold << "): "
       << (passed ? "PASS" : "FAIL") << "\n";
  out << text.str();
}

void GradReport::print_csv(std::ostream& out) const {
  std::ostringstream text;
  text << "parameter,max_rel_error\n" << std::setprecision(17);
  for (const auto& e : entries) text << e.name << "," << e.max_rel_error << "\n";
  out << text.str();
}

}  // namespace sifter
