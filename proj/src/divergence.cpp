#include "kidlab/divergence.hpp"

#include <algorithm>
#include <cmath>

namespace kidlab {

const char* divergence_name(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::FKL: return "fkl";
    case DivergenceKind::RKL: return "rkl";
    case DivergenceKind::JSD: return "jsd";
    case DivergenceKind::TVD: return "tvd";
  }
  return "?";
}

DivergenceKind divergence_from_name(const std::string& name) {
  if (name == "fkl") return DivergenceKind::FKL;
  if (name == "rkl") return DivergenceKind::RKL;
  if (name == "jsd") return DivergenceKind::JSD;
  if (name == "tvd") return DivergenceKind::TVD;
  throw std::invalid_argument("unknown divergence: " + name);
}

std::vector<double> floor_normalize(std::span<const double> p) {
  std::vector<double> out(p.size());
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    out[i] = std::max(p[i], kProbFloor);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

std::vector<double> softmax(std::span<const double> logits,
                            double temperature) {
  std::vector<double> out(logits.size());
  double inv_t = 1.0 / temperature;
  double max_logit = -1e300;
  for (double z : logits) max_logit = std::max(max_logit, z);
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - max_logit) * inv_t);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

double pointwise(DivergenceKind kind, std::span<const double> p_raw,
                 std::span<const double> q_raw) {
  if (p_raw.size() != q_raw.size())
    throw LengthMismatchError("distribution sizes differ");
  std::vector<double> p = floor_normalize(p_raw);
  std::vector<double> q = floor_normalize(q_raw);

  double acc = 0.0;
  switch (kind) {
    case DivergenceKind::FKL:
      for (size_t i = 0; i < p.size(); ++i) acc += p[i] * std::log(p[i] / q[i]);
      break;
    case DivergenceKind::RKL:
      for (size_t i = 0; i < p.size(); ++i) acc += q[i] * std::log(q[i] / p[i]);
      break;
    case DivergenceKind::JSD:
      for (size_t i = 0; i < p.size(); ++i) {
        double m = 0.5 * (p[i] + q[i]);
        acc += 0.5 * p[i] * std::log(p[i] / m) + 0.5 * q[i] * std::log(q[i] / m);
      }
      break;
    case DivergenceKind::TVD:
      for (size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
      acc *= 0.5;
      break;
  }
  // Rounding can leave a tiny negative residue when p == q.
  return std::max(acc, 0.0);
}

double sequence_divergence(DivergenceKind kind,
                           const std::vector<StepDistribution>& teacher_steps,
                           const std::vector<StepDistribution>& student_steps) {
  if (teacher_steps.size() != student_steps.size())
    throw LengthMismatchError("step lists differ in length");
  if (teacher_steps.empty())
    throw LengthMismatchError("step lists must be non-empty");
  double acc = 0.0;
  for (size_t t = 0; t < teacher_steps.size(); ++t)
    acc += pointwise(kind, teacher_steps[t].probs, student_steps[t].probs);
  return acc / double(teacher_steps.size());
}

std::vector<double> divergence_grad(DivergenceKind kind,
                                    std::span<const double> p_raw,
                                    std::span<const double> student_logits) {
  std::vector<double> p = floor_normalize(p_raw);
  std::vector<double> q = softmax(student_logits);
  size_t n = q.size();
  std::vector<double> grad(n);

  // Flooring of q is the identity whenever min_i q_i >= kProbFloor, which
  // softmax guarantees except for extremely peaked logits; the gradients
  // below are exact in that regime.
  switch (kind) {
    case DivergenceKind::FKL:
      for (size_t i = 0; i < n; ++i) grad[i] = q[i] - p[i];
      return grad;
    case DivergenceKind::RKL: {
      // d/dz_j sum q ln(q/p) = q_j (ln(q_j/p_j) - sum_k q_k ln(q_k/p_k))
      double mean_log = 0.0;
      std::vector<double> log_ratio(n);
      for (size_t i = 0; i < n; ++i) {
        log_ratio[i] = std::log(std::max(q[i], kProbFloor) / p[i]);
        mean_log += q[i] * log_ratio[i];
      }
      for (size_t i = 0; i < n; ++i) grad[i] = q[i] * (log_ratio[i] - mean_log);
      return grad;
    }
    case DivergenceKind::JSD: {
      // dJSD/dq_j = ln(q_j / M_j) / 2, then through the softmax Jacobian.
      std::vector<double> dq(n);
      double dot = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double m = 0.5 * (p[i] + q[i]);
        dq[i] = 0.5 * std::log(std::max(q[i], kProbFloor) / m);
        dot += q[i] * dq[i];
      }
      for (size_t i = 0; i < n; ++i) grad[i] = q[i] * (dq[i] - dot);
      return grad;
    }
    case DivergenceKind::TVD: {
      // Subgradient of |q - p| / 2: sign(q_j - p_j) / 2 through the softmax.
      std::vector<double> dq(n);
      double dot = 0.0;
      for (size_t i = 0; i < n; ++i) {
        dq[i] = q[i] > p[i] ? 0.5 : q[i] < p[i] ? -0.5 : 0.0;
        dot += q[i] * dq[i];
      }
      for (size_t i = 0; i < n; ++i) grad[i] = q[i] * (dq[i] - dot);
      return grad;
    }
  }
  return grad;
}

}  // namespace kidlab
