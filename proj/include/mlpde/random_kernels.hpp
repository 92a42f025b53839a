#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mlpde {

/// Tally of scalar random variables consumed by an estimator run.  The
/// convention matches the cost model used throughout: one unit per sampled
/// time fraction, d units per d-dimensional Gaussian increment.
struct RvCounter {
    std::uint64_t count = 0;

    void add(std::uint64_t n) { count += n; }
    void merge(const RvCounter& other) { count += other.count; }
};

/// Role tag separating the independent randomness attached to one node of the
/// estimator's recursion tree.  A node derives one child stream per role, so
/// the terminal draws, the level-block draws, and the streams handed to
/// recursive sub-estimators never overlap.
enum class StreamRole : std::uint8_t {
    kTerminal = 1,
    kLevelBlock = 2,
    kSubEstimator = 3,
    kReplicate = 4,
    kReference = 5,
};

/**
 * Counter-based random stream keyed by its path from the root of the
 * recursion tree.
 *
 * A stream is a 128-bit key plus a draw cursor.  Child keys are produced by
 * absorbing (level, branch, role) into the parent key with a splitmix-style
 * finalizer chain; draws are a keyed counter-mode pass over the cursor.  Two
 * consequences the estimator relies on:
 *
 *  - the draw sequence of a stream depends only on its path, never on how
 *    many draws sibling streams made, so evaluation order (serial, blocked,
 *    or parallel) cannot change any sampled value;
 *  - distinct paths collide only if their 128-bit keys collide, which for
 *    the tree sizes used here has probability far below 2^-64.
 *
 * Streams are cheap value types.  Copying one forks the cursor: the copy
 * replays the same sequence.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, RvCounter* counter = nullptr);

    /// Child stream for the recursion-tree edge (level, branch, role).  The
    /// child inherits the parent's counter and starts at cursor zero.
    [[nodiscard]] RandomStream derive_child(std::int32_t level,
                                            std::int64_t branch,
                                            StreamRole role) const;

    void attach_counter(RvCounter* counter) { counter_ = counter; }
    [[nodiscard]] RvCounter* counter() const { return counter_; }

    /// Next raw 64-bit word of the stream.
    std::uint64_t next_u64();

    /// Next uniform draw, strictly inside (0, 1).
    double next_unit_open();

private:
    RandomStream(std::uint64_t key_hi, std::uint64_t key_lo, RvCounter* counter)
        : key_hi_(key_hi), key_lo_(key_lo), counter_(counter) {}

    std::uint64_t key_hi_;
    std::uint64_t key_lo_;
    std::uint64_t cursor_ = 0;
    RvCounter* counter_ = nullptr;
};

/// Independent root seed for an indexed sub-experiment (table row, seed sweep)
/// of a run keyed by `root_seed`.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t root_seed, std::uint64_t index);

/// One draw from the arcsine density on (0, 1), via inversion
/// r = sin^2(pi u / 2).  The result is clamped to
/// [eps_machine, 1 - eps_machine] so downstream divisions by r and 1 - r stay
/// finite.  Counts one random variable.
double sample_arcsine(RandomStream& stream);

/// Fills `out` with i.i.d. N(0, dt) components via the inverse normal CDF,
/// one uniform per component.  dt = 0 yields exact zeros; dt < 0 is a hard
/// error.  Counts out.size() random variables.
void gaussian_increment(RandomStream& stream, std::span<double> out, double dt);

/// Allocating convenience overload.
[[nodiscard]] std::vector<double> gaussian_increment(RandomStream& stream, int d, double dt);

/// Quantile function of the standard normal distribution (Wichura's
/// algorithm AS 241, double-precision branch).  Requires p in (0, 1).
[[nodiscard]] double inverse_normal_cdf(double p);

}  // namespace mlpde
