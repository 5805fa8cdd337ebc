#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kidlab {

// Probability vector over the vocabulary at one decoding step.
struct StepDistribution {
  std::vector<double> probs;
};

enum class DivergenceKind { FKL, RKL, JSD, TVD };

const char* divergence_name(DivergenceKind kind);
DivergenceKind divergence_from_name(const std::string& name);

// All inputs are floored at kProbFloor and renormalized before any log is
// taken, which keeps every divergence finite and total.
constexpr double kProbFloor = 1e-9;

std::vector<double> floor_normalize(std::span<const double> p);

// Numerically stable softmax, optionally tempered.
std::vector<double> softmax(std::span<const double> logits,
                            double temperature = 1.0);

struct LengthMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FKL(p||q), RKL = KL(q||p), JSD = (KL(p||M) + KL(q||M))/2 with M = (p+q)/2,
// TVD = sum |p_i - q_i| / 2. Natural log throughout.
double pointwise(DivergenceKind kind, std::span<const double> p,
                 std::span<const double> q);

// Mean of pointwise divergences over aligned positions; the per-sequence
// average of the KD objective.
double sequence_divergence(DivergenceKind kind,
                           const std::vector<StepDistribution>& teacher_steps,
                           const std::vector<StepDistribution>& student_steps);

// Gradient of pointwise(kind, p, softmax(logits)) w.r.t. the student logits;
// p is treated as a constant (the teacher is frozen).
std::vector<double> divergence_grad(DivergenceKind kind,
                                    std::span<const double> p,
                                    std::span<const double> student_logits);

}  // namespace kidlab
