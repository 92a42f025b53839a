#pragma once

#include "mlpde/problem.hpp"
#include "mlpde/random_kernels.hpp"
#include "mlpde/stochastic_kernel.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlpde {

/// Inputs of one estimator evaluation: recursion depth n, branching base m,
/// and the space-time point (t, x) with 0 <= t < horizon.
struct MlpParams {
    int n = 1;
    int m = 1;
    double t = 0.0;
    std::vector<double> x;

    /// Hard error unless n >= 0, m >= 1, x non-empty, and 0 <= t < horizon.
    void validate(double horizon) const;
};

/// Estimation failure carrying the recursion-tree location that produced a
/// non-finite intermediate value.
class EstimationFailure : public std::runtime_error {
public:
    EstimationFailure(std::int32_t level, std::int64_t branch, const std::string& what);

    [[nodiscard]] std::int32_t level() const { return level_; }
    [[nodiscard]] std::int64_t branch() const { return branch_; }

private:
    std::int32_t level_;
    std::int64_t branch_;
};

/**
 * Multilevel Picard estimate of the value-and-gradient vector at (t, x).
 *
 * Depth n >= 1 combines m^n terminal samples of the control-variate form
 * (g(X_T) - g(x)) Z plus, for each level l = 0..n-1, m^{n-l} blocks that
 * telescope the nonlinearity between depths l and l-1:
 *
 *     [ f(s, X, U_l) - f(s, X, U_{l-1}) ] Z / (m^{n-l} rho(t, s)),
 *
 * where the second term is present only for l >= 1.  Within one block both
 * nonlinearity evaluations share the same (s, X, Z) draw while the two
 * sub-estimates U_l and U_{l-1} run on independent child streams; this
 * coupling is what makes the level differences small and is load-bearing for
 * the variance of the scheme.  Depths n <= 0 return the zero vector.
 *
 * The recursion draws nothing from `stream` directly; every random variable
 * comes from a child stream keyed by (level, branch, role), so the result is
 * a pure function of (stream key, problem, kernel, params).
 *
 * Counting: if the stream carries an RvCounter, the call adds exactly
 * rv_count_closed_form(d, n, m) to it.
 */
[[nodiscard]] EstimateVector estimate(RandomStream stream,
                                      const PdeProblem& problem,
                                      const StochasticKernel& kernel,
                                      const MlpParams& params);

/**
 * Same estimate with the top-level sample loop split into a fixed number of
 * chunks folded in chunk order; the chunks run in parallel when OpenMP is
 * enabled.  The chunk count defaults to a value independent of the thread
 * count, so the result is bitwise identical no matter how many threads run,
 * and chunk_count = 1 reproduces estimate() exactly.  Recursive
 * sub-estimators always run serially; only the outermost loop is split.
 */
[[nodiscard]] EstimateVector estimate_blocked(RandomStream stream,
                                              const PdeProblem& problem,
                                              const StochasticKernel& kernel,
                                              const MlpParams& params,
                                              int chunk_count = 0);

/// Depth-indexed branching base floor(exp(sqrt(log n))); hard error for n <= 0.
[[nodiscard]] int m_schedule(int n);

/// Exact number of scalar random variables one depth-n estimate consumes
/// (one per sampled time, d per Gaussian increment), via the recursion
///   RV(n) = d m^n + sum_{l=0}^{n-1} m^{n-l} (1 + d + RV(l) + [l >= 1] RV(l-1))
/// with RV(0) = RV(-1) = 0.  n <= 0 returns 0.  Overflow is a hard error.
[[nodiscard]] std::uint64_t rv_count_closed_form(int d, int n, int m);

/// Closed-form cost bound 2 d (3 m)^n, saturating at UINT64_MAX.
struct RvBound {
    std::uint64_t value = 0;
    bool saturated = false;
};
[[nodiscard]] RvBound rv_bound(int d, int n, int m);

/// One replicate of a batch: the estimate, or the failure that poisoned it.
struct ReplicateResult {
    EstimateVector estimate;
    std::string failure;

    [[nodiscard]] bool ok() const { return failure.empty(); }
};

/// Batch of replicates plus the shared cost figures.  rv_per_replicate is
/// identical across replicates because the draw count never depends on the
/// sampled values.
struct BatchResult {
    std::vector<ReplicateResult> replicates;
    std::uint64_t rv_per_replicate = 0;
    double wall_seconds = 0.0;
};

/// Runs `repetitions` independent estimates on streams derived from
/// (root_seed, replicate index), in parallel when OpenMP is enabled.  Each
/// replicate's result is bit-identical to its serial evaluation; failures are
/// recorded per replicate without aborting the batch.
[[nodiscard]] BatchResult run_batch(std::uint64_t root_seed,
                                    const PdeProblem& problem,
                                    const StochasticKernel& kernel,
                                    const MlpParams& params,
                                    int repetitions);

}  // namespace mlpde
